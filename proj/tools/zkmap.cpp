// SPDX-License-Identifier: Apache-2.0
//
// zkmap — compile MiniSol to stack bytecode with a zk-style source map,
// validate and query the map, reconstruct source-level traces, and run the
// accuracy/overhead bench over a fixture corpus.

#include "zkmap/compiler.hpp"
#include "zkmap/diag.hpp"
#include "zkmap/disasm.hpp"
#include "zkmap/lowering.hpp"
#include "zkmap/metrics.hpp"
#include "zkmap/trace.hpp"
#include "zkmap/vm.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

using namespace zkmap;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw CompileError(ErrorCode::Internal, "cannot read " + path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

PassConfig config_from_flags(const std::string& passes, bool no_opt, bool no_mapping,
                             uint32_t unroll_max, uint32_t inline_max) {
    PassConfig config;
    if (no_opt)
        config.order.clear();
    else if (!passes.empty()) {
        config.order.clear();
        std::stringstream ss(passes);
        std::string name;
        while (std::getline(ss, name, ',')) {
            auto kind = pass_from_name(name);
            if (!kind)
                throw CLI::ValidationError("--passes", "unknown pass '" + name + "'");
            config.order.push_back(*kind);
        }
    }
    config.mapping_enabled = !no_mapping;
    config.unroll_max_trips = unroll_max;
    config.inline_max_instrs = inline_max;
    config.validate();
    return config;
}

std::string location(const CompiledArtifact& artifact, const SourceSpan& span) {
    std::ostringstream out;
    out << span.start << ":" << span.length << ":" << span.file;
    if (span.file < artifact.source_files.size()) {
        LineCol lc = line_col_at(artifact.source_files[span.file].text, span.start);
        out << " (" << artifact.source_files[span.file].name << ":" << lc.line << ":"
            << lc.column << ")";
    }
    return out.str();
}

std::string excerpt(const CompiledArtifact& artifact, const SourceSpan& span) {
    if (span.file >= artifact.source_files.size())
        return "";
    std::string text = artifact.source_files[span.file].text.substr(span.start, span.length);
    for (auto& c : text)
        if (c == '\n')
            c = ' ';
    if (text.size() > 60)
        text = text.substr(0, 57) + "...";
    return text;
}

// ---------------------------------------------------------------------------

int cmd_compile(const std::string& input, const std::string& output, const PassConfig& config,
                bool emit_ir, const std::string& sourcemap_out,
                const std::string& sourcemap_compressed_out) {
    Compilation c = compile_source(fs::path(input).filename().string(), read_file(input), config);
    if (emit_ir)
        std::cout << dump_ir(c.module);
    CompiledArtifact artifact = make_artifact(c);
    std::string out_path = output.empty() ? fs::path(input).stem().string() + ".zkb.json" : output;
    save_artifact(artifact, out_path);
    if (!sourcemap_out.empty()) {
        std::ofstream out(sourcemap_out);
        out << export_rich(c.table);
    }
    if (!sourcemap_compressed_out.empty()) {
        std::ofstream out(sourcemap_compressed_out);
        out << encode_compressed(c.table);
    }
    std::cerr << "wrote " << out_path << " (" << c.program.code.size() << " bytes, "
              << c.table.entries.size() << " mapping entries, " << c.synthetic_excluded
              << " synthetic exclusions)\n";
    return 0;
}

int cmd_validate(const std::string& artifact_path, const PassConfig& config,
                 const std::string& format) {
    CompiledArtifact artifact = load_artifact(artifact_path);
    if (artifact.source_files.empty()) {
        std::cerr << "artifact embeds no sources; cannot validate structurally\n";
        return 1;
    }
    Compilation rebuilt = compile_source(artifact.source_files[0].name,
                                         artifact.source_files[0].text, config);

    int violations = 0;
    if (rebuilt.program.code != artifact.program.code) {
        std::cout << "bytecode-mismatch: artifact bytecode does not match a clean rebuild "
                     "with this pass configuration\n";
        ++violations;
    }
    ValidationReport syntactic = validate_syntactic(artifact.table, artifact.file_lengths());
    ValidationReport structural =
        validate_structural(artifact.table, rebuilt.unit.registry, rebuilt.unit.span_index,
                            rebuilt.module, artifact.program);
    violations += static_cast<int>(syntactic.violations.size() + structural.violations.size());
    if (format == "structured") {
        json out;
        out["entries"] = artifact.table.entries.size();
        out["violations"] = json::array();
        auto add = [&](const char* validator, const ValidationReport& r) {
            for (const auto& v : r.violations) {
                json jv;
                jv["validator"] = validator;
                jv["check"] = v.check;
                jv["detail"] = v.detail;
                out["violations"].push_back(jv);
            }
        };
        add("syntactic", syntactic);
        add("structural", structural);
        std::cout << out.dump(2) << "\n";
        return violations ? 1 : 0;
    }
    std::cout << syntactic.to_string() << structural.to_string();
    if (violations) {
        std::cout << violations << " violation(s)\n";
        return 1;
    }
    std::cout << "ok: " << artifact.table.entries.size() << " entries, both validators clean\n";
    return 0;
}

int cmd_query(const std::string& artifact_path, const std::string& offset_arg,
              const std::string& span_arg, const std::string& format) {
    CompiledArtifact artifact = load_artifact(artifact_path);
    if (!offset_arg.empty()) {
        uint32_t offset = static_cast<uint32_t>(std::stoul(offset_arg, nullptr, 0));
        auto entry = query_offset(artifact.table, artifact.program, offset);
        if (format == "structured") {
            json out;
            out["offset"] = offset;
            out["mapped"] = entry.has_value();
            if (entry) {
                out["s"] = entry->span.start;
                out["l"] = entry->span.length;
                out["f"] = entry->span.file;
                out["ir_id"] = entry->ir_id;
                out["jump"] = std::string(1, jump_type_char(entry->jump));
                out["modifier_depth"] = entry->modifier_depth;
                if (entry->zk_constraint)
                    out["zk_constraint"] = *entry->zk_constraint;
            }
            std::cout << out.dump(2) << "\n";
            return 0;
        }
        if (!entry) {
            std::cout << "offset 0x" << std::hex << offset << std::dec << ": unmapped\n";
            return 0;
        }
        std::cout << "offset 0x" << std::hex << entry->offset << std::dec << " -> "
                  << location(artifact, entry->span) << " ir=%" << entry->ir_id
                  << " jump=" << jump_type_char(entry->jump) << " depth=" << entry->modifier_depth;
        if (entry->zk_constraint)
            std::cout << " constraint=" << *entry->zk_constraint;
        std::cout << " conf=" << confidence_letter(entry->confidence) << "\n";
        std::cout << "  " << excerpt(artifact, entry->span) << "\n";
        return 0;
    }
    // span query: s:l:f
    uint32_t s = 0, l = 0, f = 0;
    if (sscanf(span_arg.c_str(), "%u:%u:%u", &s, &l, &f) != 3)
        throw CLI::ValidationError("--span", "expected s:l:f");
    auto offsets = query_span(artifact.table, {s, l, f});
    if (format == "structured") {
        json out;
        out["offsets"] = offsets;
        std::cout << out.dump(2) << "\n";
        return 0;
    }
    std::cout << offsets.size() << " offset(s)";
    for (uint32_t off : offsets)
        std::cout << " 0x" << std::hex << off << std::dec;
    std::cout << "\n";
    return 0;
}

int cmd_trace(const std::string& artifact_path, const std::string& tx_path, int index,
              const std::string& format) {
    CompiledArtifact artifact = load_artifact(artifact_path);
    TxSuite suite = load_tx_suite(tx_path);
    if (artifact.source_files.empty())
        throw CompileError(ErrorCode::Internal, "artifact embeds no sources");
    CompilationUnit unit =
        run_frontend(artifact.source_files[0].name, artifact.source_files[0].text);

    json structured = json::array();
    Storage state;
    for (size_t i = 0; i < suite.txs.size(); ++i) {
        const TxInput& tx = suite.txs[i].input;
        VmOutcome vm = run_vm(artifact.program, tx, state);
        state = vm.result.storage;
        if (index >= 0 && static_cast<size_t>(index) != i)
            continue;

        SourceTrace trace = reconstruct_trace(vm.offset_trace, artifact.table, unit.registry,
                                              artifact.program.code.size());
        if (format == "structured") {
            json jtx;
            jtx["tx"] = i;
            jtx["function"] = tx.dispatch_key();
            jtx["result"] = vm.result.describe();
            jtx["dropped"] = trace.dropped;
            jtx["events"] = json::array();
            for (const auto& e : trace.events) {
                json je;
                je["statement"] = e.statement_id;
                je["s"] = e.span.start;
                je["l"] = e.span.length;
                je["f"] = e.span.file;
                if (e.zk_constraint)
                    je["zk_constraint"] = *e.zk_constraint;
                jtx["events"].push_back(je);
            }
            structured.push_back(jtx);
            continue;
        }
        std::cout << "tx " << i << " " << tx.dispatch_key() << " -> " << vm.result.describe()
                  << "\n";
        for (size_t k = 0; k < trace.events.size(); ++k) {
            const auto& e = trace.events[k];
            std::cout << "  #" << k << " stmt " << e.statement_id << " @ "
                      << location(artifact, e.span);
            if (e.zk_constraint)
                std::cout << " [zk constraint " << *e.zk_constraint << "]";
            std::cout << "\n      " << excerpt(artifact, e.span) << "\n";
        }
        if (vm.result.reverted && !trace.events.empty()) {
            const auto& last = trace.events.back();
            std::cout << "  reverted with \"" << vm.result.revert_message << "\" at "
                      << location(artifact, last.span);
            if (last.zk_constraint)
                std::cout << " [zk constraint " << *last.zk_constraint << "]";
            std::cout << "\n";
        }
    }
    if (format == "structured")
        std::cout << structured.dump(2) << "\n";
    return 0;
}

int cmd_bench(const std::string& corpus_dir, size_t reps, const std::string& format,
              bool no_timing) {
    std::vector<std::pair<std::string, std::string>> sources;
    for (const auto& entry : fs::directory_iterator(corpus_dir))
        if (entry.path().extension() == ".msol")
            sources.emplace_back(entry.path().stem().string(), entry.path().string());
    std::sort(sources.begin(), sources.end());
    if (sources.empty()) {
        std::cerr << "no .msol fixtures in " << corpus_dir << "\n";
        return 2;
    }

    AccuracyReport identity, optimized;
    OverheadReport overhead;
    int failures = 0;
    for (const auto& [stem, path] : sources) {
        std::string text = read_file(path);
        std::string tx_path = (fs::path(corpus_dir) / (stem + ".txs.json")).string();
        if (!fs::exists(tx_path)) {
            std::cerr << stem << ": no tx suite, skipped\n";
            continue;
        }
        TxSuite suite = load_tx_suite(tx_path);

        Compilation plain = compile_source(stem + ".msol", text, PassConfig::none());
        Compilation opt = compile_source(stem + ".msol", text, PassConfig{});

        TwinRunResult twin = run_twin(opt, suite);
        for (const auto& m : twin.mismatches) {
            std::cerr << stem << " tx " << m.tx_index << ": engines disagree: " << m.detail
                      << "\n";
            ++failures;
        }
        for (const auto& f : twin.expect_failures) {
            std::cerr << stem << " " << f << "\n";
            ++failures;
        }

        identity.add(measure_accuracy(plain, suite, stem));
        optimized.add(measure_accuracy(opt, suite, stem));
        if (!no_timing)
            overhead.add(measure_overhead(stem, text, PassConfig{}, reps));
    }
    overhead.finish();

    if (format == "structured") {
        json out;
        out["fixtures"] = json::array();
        for (size_t i = 0; i < optimized.fixtures.size(); ++i) {
            json jf;
            jf["name"] = optimized.fixtures[i].name;
            jf["identity_accuracy_pct"] = identity.fixtures[i].accuracy_pct;
            jf["optimized_accuracy_pct"] = optimized.fixtures[i].accuracy_pct;
            jf["mapped_events"] = optimized.fixtures[i].mapped_events;
            jf["unmapped_ratio_pct"] = optimized.fixtures[i].unmapped_ratio_pct;
            if (!no_timing) {
                jf["overhead_pct"] = overhead.sources[i].overhead_pct;
                jf["t_off_ms"] = overhead.sources[i].t_off_ms;
                jf["t_on_ms"] = overhead.sources[i].t_on_ms;
            }
            out["fixtures"].push_back(jf);
        }
        out["identity_aggregate_pct"] = identity.aggregate_pct;
        out["optimized_aggregate_pct"] = optimized.aggregate_pct;
        if (!no_timing) {
            out["overhead_aggregate_pct"] = overhead.aggregate_pct;
            out["bytecode_identical"] = overhead.bytecode_identical;
            double d_front = 0, d_passes = 0, d_back = 0;
            for (const auto& s : overhead.sources) {
                d_front += s.stages_on.frontend_lowering_ms - s.stages_off.frontend_lowering_ms;
                d_passes += s.stages_on.passes_ms - s.stages_off.passes_ms;
                d_back += s.stages_on.backend_mapgen_ms - s.stages_off.backend_mapgen_ms;
            }
            out["stage_attribution_ms"] = {{"frontend_lowering", d_front},
                                           {"passes", d_passes},
                                           {"backend_mapgen", d_back}};
        }
        std::cout << out.dump(2) << "\n";
    } else {
        printf("%-20s %10s %10s %10s\n", "fixture", "identity%", "default%",
               no_timing ? "" : "overhead%");
        for (size_t i = 0; i < optimized.fixtures.size(); ++i) {
            printf("%-20s %10.2f %10.2f", optimized.fixtures[i].name.c_str(),
                   identity.fixtures[i].accuracy_pct, optimized.fixtures[i].accuracy_pct);
            if (!no_timing)
                printf(" %10.2f", overhead.sources[i].overhead_pct);
            printf("\n");
        }
        printf("%-20s %10.2f %10.2f", "aggregate", identity.aggregate_pct,
               optimized.aggregate_pct);
        if (!no_timing)
            printf(" %10.2f", overhead.aggregate_pct);
        printf("\n");
        if (!no_timing) {
            printf("bytecode identical with mapping on/off: %s\n",
                   overhead.bytecode_identical ? "yes" : "NO");
            double d_front = 0, d_passes = 0, d_back = 0;
            for (const auto& s : overhead.sources) {
                d_front += s.stages_on.frontend_lowering_ms - s.stages_off.frontend_lowering_ms;
                d_passes += s.stages_on.passes_ms - s.stages_off.passes_ms;
                d_back += s.stages_on.backend_mapgen_ms - s.stages_off.backend_mapgen_ms;
            }
            double total = d_front + d_passes + d_back;
            if (total > 0)
                printf("mapping cost by stage: frontend+lowering %.0f%%, passes %.0f%%, "
                       "backend+mapgen %.0f%%\n",
                       100 * d_front / total, 100 * d_passes / total, 100 * d_back / total);
        }
    }
    return failures ? 1 : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"MiniSol zk-style compiler with end-to-end source mapping"};
    app.require_subcommand(1);

    std::string passes, input, output, sourcemap_out, sourcemap_compressed_out;
    bool no_opt = false, no_mapping = false, emit_ir = false, no_timing = false;
    uint32_t unroll_max = 8, inline_max = 40;

    auto add_pass_flags = [&](CLI::App* cmd) {
        cmd->add_option("--passes", passes, "comma-separated pass list");
        cmd->add_flag("--no-opt", no_opt, "disable all passes");
        cmd->add_option("--unroll-max", unroll_max, "max trip count for full unrolling");
        cmd->add_option("--inline-max", inline_max, "max callee size for inlining");
    };

    auto* compile = app.add_subcommand("compile", "compile a MiniSol file to a .zkb.json artifact");
    compile->add_option("file", input)->required();
    compile->add_option("-o,--output", output, "artifact path");
    add_pass_flags(compile);
    compile->add_flag("--no-mapping", no_mapping, "skip source-map bookkeeping");
    compile->add_flag("--emit-ir", emit_ir, "print the final IR to stdout");
    compile->add_option("--sourcemap-out", sourcemap_out, "write the rich source map");
    compile->add_option("--sourcemap-compressed-out", sourcemap_compressed_out,
                        "write the legacy compressed source map");

    std::string artifact_path, offset_arg, span_arg, tx_path, format = "human";
    auto* validate = app.add_subcommand("validate", "run both mapping validators");
    validate->add_option("artifact", artifact_path)->required();
    add_pass_flags(validate);
    validate->add_option("--format", format)->check(CLI::IsMember({"human", "structured"}));

    auto* query = app.add_subcommand("query", "look up mapping entries");
    query->add_option("artifact", artifact_path)->required();
    auto* opt_offset = query->add_option("--offset", offset_arg, "bytecode offset (0x.. or dec)");
    auto* opt_span = query->add_option("--span", span_arg, "source span s:l:f");
    opt_offset->excludes(opt_span);
    query->add_option("--format", format)->check(CLI::IsMember({"human", "structured"}));

    auto* disasm = app.add_subcommand("disasm", "disassemble an artifact");
    disasm->add_option("artifact", artifact_path)->required();

    auto* trace = app.add_subcommand("trace", "run transactions and reconstruct source traces");
    trace->add_option("artifact", artifact_path)->required();
    trace->add_option("--tx", tx_path, "transaction suite (.txs.json)")->required();
    int index = -1;
    trace->add_option("--index", index, "trace only this transaction");
    trace->add_option("--format", format)->check(CLI::IsMember({"human", "structured"}));

    std::string corpus_dir;
    size_t reps = 10;
    auto* bench = app.add_subcommand("bench", "accuracy and overhead over a fixture corpus");
    bench->add_option("corpus", corpus_dir)->required();
    bench->add_option("--reps", reps, "timing repetitions");
    bench->add_option("--format", format)->check(CLI::IsMember({"human", "structured"}));
    bench->add_flag("--no-timing", no_timing, "skip timing for byte-reproducible output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2; // usage error
    }

    try {
        if (compile->parsed())
            return cmd_compile(input, output,
                               config_from_flags(passes, no_opt, no_mapping, unroll_max,
                                                 inline_max),
                               emit_ir, sourcemap_out, sourcemap_compressed_out);
        if (validate->parsed())
            return cmd_validate(artifact_path,
                                config_from_flags(passes, no_opt, false, unroll_max, inline_max),
                                format);
        if (query->parsed()) {
            if (offset_arg.empty() && span_arg.empty())
                throw CLI::ValidationError("query", "need --offset or --span");
            return cmd_query(artifact_path, offset_arg, span_arg, format);
        }
        if (disasm->parsed()) {
            std::cout << disassemble(load_artifact(artifact_path).program);
            return 0;
        }
        if (trace->parsed())
            return cmd_trace(artifact_path, tx_path, index, format);
        if (bench->parsed())
            return cmd_bench(corpus_dir, reps, format, no_timing);
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const CompileError& e) {
        std::cerr << error_code_name(e.code) << ": " << e.what() << "\n";
        return 1;
    } catch (const CodecError& e) {
        std::cerr << "codec error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
