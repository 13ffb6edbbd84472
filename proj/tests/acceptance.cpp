// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Run via ctest (-R acceptance) or directly.

#include "zkmap/compiler.hpp"
#include "zkmap/diag.hpp"
#include "zkmap/lowering.hpp"
#include "zkmap/metrics.hpp"
#include "zkmap/trace.hpp"
#include "zkmap/vm.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

using namespace zkmap;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int criterion, bool ok, const std::string& what, const std::string& detail = "") {
    printf("criterion %d: %s  %s%s%s\n", criterion, ok ? "PASS" : "FAIL", what.c_str(),
           detail.empty() ? "" : " -- ", detail.c_str());
    if (!ok)
        ++failures;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

struct Fixture {
    std::string stem;
    std::string text;
    TxSuite suite;
};

std::vector<Fixture> load_corpus() {
    std::vector<Fixture> out;
    for (const auto& entry : fs::directory_iterator(ZKMAP_FIXTURE_DIR)) {
        if (entry.path().extension() != ".msol")
            continue;
        Fixture f;
        f.stem = entry.path().stem().string();
        f.text = read_file(entry.path().string());
        f.suite = load_tx_suite((entry.path().parent_path() / (f.stem + ".txs.json")).string());
        out.push_back(std::move(f));
    }
    std::sort(out.begin(), out.end(),
              [](const Fixture& a, const Fixture& b) { return a.stem < b.stem; });
    return out;
}

std::vector<std::pair<std::string, PassConfig>> config_matrix() {
    return {
        {"none", PassConfig::none()},
        {"const_fold", PassConfig::single(PassKind::ConstFold)},
        {"dce", PassConfig::single(PassKind::Dce)},
        {"reorder", PassConfig::single(PassKind::Reorder)},
        {"cfg_restructure", PassConfig::single(PassKind::CfgRestructure)},
        {"default", PassConfig{}},
    };
}

// --- criterion 1: identity accuracy ----------------------------------------

void criterion_identity(const std::vector<Fixture>& corpus) {
    auto start = std::chrono::steady_clock::now();

    // corpus shape: at least 20 fixtures spanning at least 8 categories
    std::set<std::string> categories;
    size_t listed = 0;
    {
        auto manifest = nlohmann::json::parse(
            read_file(std::string(ZKMAP_FIXTURE_DIR) + "/manifest.json"));
        for (const auto& f : manifest.at("fixtures")) {
            ++listed;
            for (const auto& c : f.at("categories"))
                categories.insert(c.get<std::string>());
        }
    }

    AccuracyReport report_identity;
    std::ostringstream any_fail;
    for (const auto& f : corpus) {
        Compilation c = compile_source(f.stem + ".msol", f.text, PassConfig::none());
        AccuracyResult acc = measure_accuracy(c, f.suite, f.stem);
        if (acc.accuracy_pct != 100.0)
            any_fail << f.stem << "=" << acc.accuracy_pct << "% ";
        if (!acc.coverage_warnings.empty())
            any_fail << f.stem << ":coverage ";
        report_identity.add(acc);
    }
    double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::ostringstream detail;
    detail << corpus.size() << " fixtures, " << categories.size() << " categories, aggregate "
           << report_identity.aggregate_pct << "%, " << seconds << "s";
    bool ok = corpus.size() >= 20 && listed >= 20 && categories.size() >= 8 &&
              report_identity.aggregate_pct == 100.0 && any_fail.str().empty() && seconds < 30.0;
    report(1, ok, "identity-pipeline accuracy is exactly 100%",
           detail.str() + (any_fail.str().empty() ? "" : " [" + any_fail.str() + "]"));
}

// --- criterion 2: optimized accuracy ----------------------------------------

void criterion_optimized(const std::vector<Fixture>& corpus) {
    AccuracyReport report_opt;
    std::ostringstream below;
    for (const auto& f : corpus) {
        Compilation c = compile_source(f.stem + ".msol", f.text, PassConfig{});
        AccuracyResult acc = measure_accuracy(c, f.suite, f.stem);
        if (acc.accuracy_pct < 90.0)
            below << f.stem << "=" << acc.accuracy_pct << "% ";
        report_opt.add(acc);
    }
    std::ostringstream detail;
    detail << "aggregate " << report_opt.aggregate_pct << "%";
    bool ok = report_opt.aggregate_pct >= 96.0 && below.str().empty();
    report(2, ok, "default-pipeline accuracy >= 96% aggregate, >= 90% per fixture",
           detail.str() + (below.str().empty() ? "" : " [below floor: " + below.str() + "]"));
}

// --- criterion 3: overhead ----------------------------------------------------

void criterion_overhead(const std::vector<Fixture>& corpus) {
    OverheadReport overhead;
    for (const auto& f : corpus)
        overhead.add(measure_overhead(f.stem, f.text, PassConfig{}, 10));
    overhead.finish();
    std::ostringstream detail;
    detail << "aggregate " << overhead.aggregate_pct << "%, bytecode identical: "
           << (overhead.bytecode_identical ? "yes" : "no");
    report(3, overhead.aggregate_pct < 25.0 && overhead.bytecode_identical,
           "mapping overhead < 25%, bytecode identical with mapping off", detail.str());
}

// --- criterion 4: validators clean on honest output ---------------------------

void criterion_validators(const std::vector<Fixture>& corpus) {
    size_t cells = 0, dirty = 0;
    std::ostringstream detail;
    for (const auto& f : corpus) {
        for (const auto& [name, config] : config_matrix()) {
            Compilation c = compile_source(f.stem + ".msol", f.text, config);
            auto syn = validate_syntactic(c.table, {c.unit.text.size()});
            auto str = validate_structural(c.table, c.unit.registry, c.unit.span_index,
                                           c.module, c.program);
            ++cells;
            if (!syn.ok() || !str.ok()) {
                ++dirty;
                if (dirty < 4)
                    detail << f.stem << "/" << name << " ";
            }
        }
    }
    std::ostringstream summary;
    summary << cells << " fixture x config cells, " << dirty << " with violations "
            << detail.str();
    report(4, dirty == 0, "both validators clean on every honest pipeline", summary.str());
}

// --- criterion 5: fault injection ---------------------------------------------

bool detected(const Compilation& c, const MappingTable& mutated) {
    auto syn = validate_syntactic(mutated, {c.unit.text.size()});
    if (!syn.ok())
        return true;
    auto str = validate_structural(mutated, c.unit.registry, c.unit.span_index, c.module,
                                   c.program);
    return !str.ok();
}

void criterion_faults(const std::vector<Fixture>& corpus) {
    const std::vector<std::string> fixture_names = {"zkvoting", "branch_chain",
                                                    "modifier_owned"};
    const int trials = 20;
    size_t attempted = 0, caught = 0;
    std::ostringstream missed;

    for (const auto& name : fixture_names) {
        auto it = std::find_if(corpus.begin(), corpus.end(),
                               [&](const Fixture& f) { return f.stem == name; });
        if (it == corpus.end())
            continue;
        Compilation c = compile_source(name + ".msol", it->text, PassConfig{});
        const MappingTable& table = c.table;

        // basic-block leaders, for the swap operator's context constraint
        std::set<uint32_t> leaders = {0};
        {
            uint32_t scan = 0;
            while (scan < c.program.code.size()) {
                DecodedInstr d = decode_at(c.program.code, scan);
                if (d.op == Op::JUMPDEST)
                    leaders.insert(scan);
                if (d.op == Op::JUMP || d.op == Op::JUMPI || d.op == Op::RETURN ||
                    d.op == Op::REVERT || d.op == Op::STOP)
                    leaders.insert(scan + d.length);
                scan += d.length;
            }
        }
        auto same_block_same_stmt_prev = [&](size_t idx) {
            if (idx == 0)
                return false;
            const auto& prev = table.entries[idx - 1];
            const auto& cur = table.entries[idx];
            for (uint32_t off = prev.offset + 1; off <= cur.offset; ++off)
                if (leaders.count(off))
                    return false;
            auto a = c.unit.registry.statement_at(prev.span);
            auto b = c.unit.registry.statement_at(cur.span);
            return a && b && *a == *b;
        };

        std::mt19937 rng(0xC0FFEE ^ std::hash<std::string>{}(name));
        auto pick = [&](size_t n) { return static_cast<size_t>(rng() % n); };

        for (int op = 0; op < 5; ++op) {
            for (int t = 0; t < trials; ++t) {
                MappingTable mutated = table;
                bool prepared = false;
                switch (op) {
                case 0: { // span shift into unregistered territory
                    for (int attempt = 0; attempt < 200 && !prepared; ++attempt) {
                        size_t i = pick(mutated.entries.size());
                        int delta = 1 + static_cast<int>(rng() % 3);
                        if (rng() % 2)
                            delta = -delta;
                        SourceSpan s = table.entries[i].span;
                        int64_t start = static_cast<int64_t>(s.start) + delta;
                        if (start < 0 || start + s.length > c.unit.text.size())
                            continue;
                        s.start = static_cast<uint32_t>(start);
                        if (c.unit.span_index.contains(s))
                            continue;
                        mutated.entries[i].span = s;
                        prepared = true;
                    }
                    break;
                }
                case 1: { // span swap across disconnected statements
                    std::vector<size_t> anchored;
                    for (size_t i = 0; i < table.entries.size(); ++i)
                        if (same_block_same_stmt_prev(i))
                            anchored.push_back(i);
                    for (int attempt = 0; attempt < 400 && !prepared; ++attempt) {
                        if (anchored.empty())
                            break;
                        size_t i = anchored[pick(anchored.size())];
                        size_t j = pick(table.entries.size());
                        auto a = c.unit.registry.statement_at(table.entries[i].span);
                        auto b = c.unit.registry.statement_at(table.entries[j].span);
                        if (!a || !b || *a == *b || c.unit.registry.connected(*a, *b))
                            continue;
                        std::swap(mutated.entries[i].span, mutated.entries[j].span);
                        prepared = true;
                    }
                    break;
                }
                case 2: { // offset duplication
                    if (mutated.entries.size() < 2)
                        break;
                    size_t i = 1 + pick(mutated.entries.size() - 1);
                    mutated.entries[i].offset = mutated.entries[i - 1].offset;
                    prepared = true;
                    break;
                }
                case 3: { // registry-foreign span
                    for (int attempt = 0; attempt < 200 && !prepared; ++attempt) {
                        size_t i = pick(mutated.entries.size());
                        SourceSpan s;
                        s.file = 0;
                        s.length = 2 + static_cast<uint32_t>(rng() % 5);
                        s.start = static_cast<uint32_t>(
                            rng() % (c.unit.text.size() - s.length));
                        if (c.unit.span_index.contains(s))
                            continue;
                        mutated.entries[i].span = s;
                        prepared = true;
                    }
                    break;
                }
                case 4: { // dangling ir_id
                    size_t i = pick(mutated.entries.size());
                    mutated.entries[i].ir_id = c.module.next_ir_id + 1000 + (rng() % 100);
                    prepared = true;
                    break;
                }
                }
                if (!prepared)
                    continue;
                ++attempted;
                if (detected(c, mutated))
                    ++caught;
                else
                    missed << name << ":op" << op << ":t" << t << " ";
            }
        }
    }
    std::ostringstream detail;
    detail << caught << "/" << attempted << " injected faults detected";
    report(5, attempted >= 5 * trials && caught == attempted,
           "all seeded mapping faults are detected",
           detail.str() + (missed.str().empty() ? "" : " [missed: " + missed.str() + "]"));
}

// --- criterion 6: semantic twin equivalence ------------------------------------

void criterion_twin(const std::vector<Fixture>& corpus) {
    size_t cells = 0, bad = 0;
    std::ostringstream detail;
    for (const auto& f : corpus) {
        for (const auto& [name, config] : config_matrix()) {
            Compilation c = compile_source(f.stem + ".msol", f.text, config);
            TwinRunResult twin = run_twin(c, f.suite);
            ++cells;
            if (!twin.ok()) {
                ++bad;
                if (bad < 4)
                    detail << f.stem << "/" << name << " ";
            }
        }
    }
    std::ostringstream summary;
    summary << cells << " cells, " << bad << " with discrepancies " << detail.str();
    report(6, bad == 0, "interpreter and VM agree on every fixture, config and tx",
           summary.str());
}

// --- criterion 7: determinism ----------------------------------------------------

void criterion_determinism(const std::vector<Fixture>& corpus) {
    bool ok = true;
    std::string first_bad;
    for (const auto& f : corpus) {
        Compilation a = compile_source(f.stem + ".msol", f.text, PassConfig{});
        Compilation b = compile_source(f.stem + ".msol", f.text, PassConfig{});
        if (artifact_to_json(make_artifact(a)) != artifact_to_json(make_artifact(b))) {
            ok = false;
            if (first_bad.empty())
                first_bad = f.stem;
        }
    }

    // two cold runs of the CLI binary on the flagship fixture
    std::string cli = ZKMAP_CLI_PATH;
    bool cli_ok = true;
    if (fs::exists(cli)) {
        std::string src = std::string(ZKMAP_FIXTURE_DIR) + "/zkvoting.msol";
        std::string out1 = fs::temp_directory_path() / "zkmap_det_1.zkb.json";
        std::string out2 = fs::temp_directory_path() / "zkmap_det_2.zkb.json";
        std::string cmd1 = cli + " compile " + src + " -o " + out1 + " 2>/dev/null";
        std::string cmd2 = cli + " compile " + src + " -o " + out2 + " 2>/dev/null";
        cli_ok = std::system(cmd1.c_str()) == 0 && std::system(cmd2.c_str()) == 0 &&
                 read_file(out1) == read_file(out2);
    }
    report(7, ok && cli_ok, "repeated cold compiles are byte-identical",
           ok ? (cli_ok ? "library and CLI runs match" : "CLI runs differ")
              : "library runs differ on " + first_bad);
}

// --- criterion 8: codec round-trips ----------------------------------------------

void criterion_codecs(const std::vector<Fixture>& corpus) {
    bool ok = true;
    std::string detail = "corpus tables";
    for (const auto& f : corpus) {
        Compilation c = compile_source(f.stem + ".msol", f.text, PassConfig{});
        auto decoded = decode_compressed(encode_compressed(c.table), c.table.files);
        if (!(decoded.records == table_records(c.table)))
            ok = false;
        MappingTable back = import_rich(export_rich(c.table), c.table.files);
        if (!(back == c.table))
            ok = false;
    }
    std::mt19937 rng(4242);
    for (int trial = 0; trial < 1000 && ok; ++trial) {
        MappingTable table;
        table.files = {"a.msol", "b.msol"};
        uint32_t offset = 0;
        size_t n = rng() % 24;
        for (size_t i = 0; i < n; ++i) {
            MappingEntry e;
            e.span.start = static_cast<uint32_t>(rng() % 2000);
            e.span.length = 1 + static_cast<uint32_t>(rng() % 99);
            e.span.file = static_cast<uint32_t>(rng() % 2);
            e.offset = offset;
            offset += 1 + static_cast<uint32_t>(rng() % 9);
            e.jump = static_cast<JumpType>(rng() % 3);
            e.modifier_depth = static_cast<uint32_t>(rng() % 4);
            table.entries.push_back(e);
        }
        auto decoded = decode_compressed(encode_compressed(table), table.files);
        if (!(decoded.records == table_records(table)))
            ok = false;
    }
    if (ok)
        detail += " + 1000 generated tables round-trip";
    report(8, ok, "compressed and rich source maps round-trip", detail);
}

// --- criterion 9: the ZKVoting scenario -------------------------------------------

void criterion_scenario(const std::vector<Fixture>& corpus) {
    auto it = std::find_if(corpus.begin(), corpus.end(),
                           [](const Fixture& f) { return f.stem == "zkvoting"; });
    if (it == corpus.end()) {
        report(9, false, "ZKVoting scenario", "fixture missing");
        return;
    }
    Compilation c = compile_source("zkvoting.msol", it->text, PassConfig{});

    // (a) a failing proof resolves to the require statement, constraint 1
    TxInput bad;
    bad.function = "submitVote";
    bad.args = {0};
    bad.sender = 2;
    Storage fresh;
    VmOutcome vm_bad = run_vm(c.program, bad, fresh);
    SourceTrace bad_trace = reconstruct_trace(vm_bad.offset_trace, c.table, c.unit.registry,
                                              c.program.code.size());
    bool part_a = vm_bad.result.reverted && vm_bad.result.revert_message == "Invalid proof" &&
                  !bad_trace.events.empty();
    if (part_a) {
        const auto& last = bad_trace.events.back();
        std::string text = it->text.substr(last.span.start, last.span.length);
        part_a = text.find("require(verifyZKProof") == 0 && last.zk_constraint == 1;
    }

    // (b) the state update maps to the assignment statement
    TxInput good;
    good.function = "submitVote";
    good.args = {7};
    good.sender = 1;
    VmOutcome vm_good = run_vm(c.program, good, fresh);
    bool part_b = false;
    for (uint32_t offset : vm_good.offset_trace) {
        if (c.program.code[offset] != static_cast<uint8_t>(Op::SSTOREK))
            continue;
        for (const auto& e : c.table.entries) {
            if (e.offset != offset)
                continue;
            std::string text = it->text.substr(e.span.start, e.span.length);
            if (text == "hasVoted[msg.sender] = true;" && !e.zk_constraint)
                part_b = true;
        }
    }
    report(9, part_a && part_b, "ZKVoting failing proof and state update resolve correctly",
           std::string("require+constraint1: ") + (part_a ? "yes" : "no") +
               ", assignment: " + (part_b ? "yes" : "no"));
}

} // namespace

int main() {
    try {
        auto corpus = load_corpus();
        criterion_identity(corpus);
        criterion_optimized(corpus);
        criterion_overhead(corpus);
        criterion_validators(corpus);
        criterion_faults(corpus);
        criterion_twin(corpus);
        criterion_determinism(corpus);
        criterion_codecs(corpus);
        criterion_scenario(corpus);
    } catch (const std::exception& e) {
        printf("acceptance suite aborted: %s\n", e.what());
        return 1;
    }
    printf("%s\n", failures ? "ACCEPTANCE: FAILED" : "ACCEPTANCE: ALL CRITERIA PASS");
    return failures ? 1 : 0;
}
