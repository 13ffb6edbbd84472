// SPDX-License-Identifier: Apache-2.0
#include "zkmap/metrics.hpp"

#include "zkmap/diag.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace zkmap {

using nlohmann::json;

TxSuite parse_tx_suite(const std::string& json_text) {
    TxSuite suite;
    json arr = json::parse(json_text);
    for (const auto& j : arr) {
        TxCase tx;
        tx.input.function = j.at("function").get<std::string>();
        tx.input.args = j.at("args").get<std::vector<uint64_t>>();
        tx.input.sender = j.value("sender", 0ull);
        if (j.count("expect")) {
            const auto& e = j.at("expect");
            tx.expect.present = true;
            if (e.count("status")) {
                const auto& s = e.at("status");
                if (s.count("reverted")) {
                    tx.expect.reverted = true;
                    tx.expect.revert_message = s.at("reverted").get<std::string>();
                } else if (s.count("returned")) {
                    if (!s.at("returned").is_null())
                        tx.expect.value = s.at("returned").get<uint64_t>();
                }
            }
            if (e.count("storage")) {
                Storage st;
                const auto& sj = e.at("storage");
                if (sj.count("scalars"))
                    for (const auto& [slot, value] : sj.at("scalars").items())
                        st.scalars[static_cast<uint32_t>(std::stoul(slot))] =
                            value.get<uint64_t>();
                if (sj.count("keyed"))
                    for (const auto& cell : sj.at("keyed"))
                        st.keyed[{cell.at("slot").get<uint32_t>(),
                                  cell.at("key").get<uint64_t>()}] =
                            cell.at("value").get<uint64_t>();
                tx.expect.storage = st;
            }
            if (e.count("events")) {
                std::vector<EventRecord> events;
                for (const auto& ev : e.at("events"))
                    events.push_back({ev.at("event").get<std::string>(),
                                      ev.at("args").get<std::vector<uint64_t>>()});
                tx.expect.events = std::move(events);
            }
        }
        suite.txs.push_back(std::move(tx));
    }
    return suite;
}

TxSuite load_tx_suite(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw CompileError(ErrorCode::Internal, "cannot read tx suite " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_tx_suite(text);
}

namespace {

std::string check_expect(const TxExpect& expect, const ExecResult& got) {
    if (!expect.present)
        return "";
    std::ostringstream out;
    if (expect.reverted != got.reverted)
        out << "status kind mismatch; ";
    else if (expect.reverted && expect.revert_message != got.revert_message)
        out << "revert message mismatch (expected \"" << expect.revert_message << "\", got \""
            << got.revert_message << "\"); ";
    else if (!expect.reverted && expect.value != got.value)
        out << "return value mismatch; ";
    if (expect.storage && !(got.storage == *expect.storage))
        out << "storage mismatch; ";
    if (expect.events && !(got.events == *expect.events))
        out << "event mismatch; ";
    return out.str();
}

std::string describe_diff(const ExecResult& a, const ExecResult& b) {
    std::ostringstream out;
    out << "interpreter: " << a.describe() << " / vm: " << b.describe();
    if (!(a.storage == b.storage))
        out << " (storage differs)";
    if (!(a.events == b.events))
        out << " (events differ)";
    return out.str();
}

} // namespace

TwinRunResult run_twin(const Compilation& compilation, const TxSuite& suite) {
    TwinRunResult out;
    Storage interp_state, vm_state;
    for (size_t i = 0; i < suite.txs.size(); ++i) {
        const TxCase& tx = suite.txs[i];
        InterpOutcome ir = interpret_source(compilation.unit, tx.input, interp_state);
        VmOutcome vr = run_vm(compilation.program, tx.input, vm_state);
        if (!(ir.result == vr.result))
            out.mismatches.push_back({i, describe_diff(ir.result, vr.result)});
        std::string expect_problem = check_expect(tx.expect, ir.result);
        if (!expect_problem.empty())
            out.expect_failures.push_back("tx " + std::to_string(i) + ": " + expect_problem);
        interp_state = ir.result.storage;
        vm_state = vr.result.storage;
    }
    return out;
}

namespace {

std::vector<uint32_t> collapse(const std::vector<uint32_t>& raw) {
    std::vector<uint32_t> out;
    for (uint32_t v : raw)
        if (out.empty() || out.back() != v)
            out.push_back(v);
    return out;
}

/// Marks which elements of `a` belong to a longest common subsequence of a
/// and b.
std::vector<bool> lcs_matched(const std::vector<uint32_t>& a, const std::vector<uint32_t>& b) {
    size_t n = a.size(), m = b.size();
    std::vector<std::vector<uint32_t>> dp(n + 1, std::vector<uint32_t>(m + 1, 0));
    for (size_t i = n; i-- > 0;)
        for (size_t j = m; j-- > 0;)
            dp[i][j] = a[i] == b[j] ? dp[i + 1][j + 1] + 1
                                    : std::max(dp[i + 1][j], dp[i][j + 1]);
    std::vector<bool> matched(n, false);
    size_t i = 0, j = 0;
    while (i < n && j < m) {
        if (a[i] == b[j]) {
            matched[i] = true;
            ++i;
            ++j;
        } else if (dp[i + 1][j] >= dp[i][j + 1]) {
            ++i;
        } else {
            ++j;
        }
    }
    return matched;
}

} // namespace

AccuracyResult measure_accuracy(const Compilation& compilation, const TxSuite& suite,
                                const std::string& name) {
    AccuracyResult out;
    out.name = name;

    std::map<uint32_t, const MappingEntry*> by_offset;
    for (const auto& e : compilation.table.entries)
        by_offset[e.offset] = &e;

    // coverage: every external function must be exercised
    std::set<std::string> called;
    for (const auto& tx : suite.txs)
        called.insert(tx.input.dispatch_key());
    for (const auto& [key, offset] : compilation.program.function_table)
        if (!called.count(key))
            out.coverage_warnings.push_back("external function " + key +
                                            " never exercised by the tx suite");

    Storage interp_state, vm_state;
    for (const auto& tx : suite.txs) {
        InterpOutcome ir = interpret_source(compilation.unit, tx.input, interp_state);
        VmOutcome vr = run_vm(compilation.program, tx.input, vm_state);
        interp_state = ir.result.storage;
        vm_state = vr.result.storage;

        out.executed_instructions += vr.offset_trace.size();

        // map VM instruction events to statements
        std::vector<uint32_t> raw; // statement per mapped event
        for (uint32_t offset : vr.offset_trace) {
            auto found = by_offset.find(offset);
            if (found == by_offset.end()) {
                ++out.unmapped_events;
                continue;
            }
            auto stmt = compilation.unit.registry.statement_at(found->second->span);
            if (!stmt) {
                ++out.unmapped_events;
                continue;
            }
            raw.push_back(*stmt);
        }

        std::vector<uint32_t> v_collapsed = collapse(raw);
        std::vector<uint32_t> r_collapsed = collapse(ir.statement_trace);
        std::vector<bool> matched = lcs_matched(v_collapsed, r_collapsed);

        // each raw event inherits its collapsed representative's verdict
        size_t group = 0;
        for (size_t i = 0; i < raw.size(); ++i) {
            if (i > 0 && raw[i] != raw[i - 1])
                ++group;
            ++out.mapped_events;
            if (matched[group])
                ++out.matched_events;
        }
    }

    out.accuracy_pct = out.mapped_events == 0
                           ? 100.0
                           : 100.0 * static_cast<double>(out.matched_events) /
                                 static_cast<double>(out.mapped_events);
    out.unmapped_ratio_pct = out.executed_instructions == 0
                                 ? 0.0
                                 : 100.0 * static_cast<double>(out.unmapped_events) /
                                       static_cast<double>(out.executed_instructions);
    return out;
}

void AccuracyReport::add(AccuracyResult r) {
    total_mapped += r.mapped_events;
    total_matched += r.matched_events;
    fixtures.push_back(std::move(r));
    aggregate_pct = total_mapped == 0 ? 100.0
                                      : 100.0 * static_cast<double>(total_matched) /
                                            static_cast<double>(total_mapped);
}

namespace {

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    size_t n = values.size();
    return n % 2 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

} // namespace

OverheadResult measure_overhead(const std::string& name, const std::string& text,
                                const PassConfig& config, size_t repetitions) {
    OverheadResult out;
    out.name = name;
    repetitions = std::max<size_t>(repetitions, 3);

    PassConfig off = config;
    off.mapping_enabled = false;
    PassConfig on = config;
    on.mapping_enabled = true;

    // calibrate a batch size so one measurement is comfortably above clock
    // resolution
    auto t0 = std::chrono::steady_clock::now();
    Compilation coff = compile_source(name, text, off);
    double single_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    out.clock_warning = single_ms < 1.0;
    size_t batch = single_ms >= 3.0 ? 1 : static_cast<size_t>(3.0 / std::max(single_ms, 1e-4)) + 1;

    Compilation con = compile_source(name, text, on);
    out.bytecode_identical = coff.program.code == con.program.code;
    out.stages_off = coff.times;
    out.stages_on = con.times;

    auto time_batch = [&](const PassConfig& cfg) {
        auto start = std::chrono::steady_clock::now();
        for (size_t i = 0; i < batch; ++i) {
            Compilation c = compile_source(name, text, cfg);
            (void)c;
        }
        double total =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                .count();
        return total / static_cast<double>(batch);
    };

    std::vector<double> offs, ons;
    for (size_t r = 0; r < repetitions; ++r) {
        offs.push_back(time_batch(off));
        ons.push_back(time_batch(on));
    }
    out.t_off_ms = median(offs);
    out.t_on_ms = median(ons);
    out.overhead_pct = out.t_off_ms <= 0 ? 0 : (out.t_on_ms - out.t_off_ms) / out.t_off_ms * 100.0;
    return out;
}

void OverheadReport::add(OverheadResult r) {
    bytecode_identical = bytecode_identical && r.bytecode_identical;
    sources.push_back(std::move(r));
}

void OverheadReport::finish() {
    if (sources.empty()) {
        aggregate_pct = 0;
        return;
    }
    double sum = 0;
    for (const auto& s : sources)
        sum += s.overhead_pct;
    aggregate_pct = sum / static_cast<double>(sources.size());
}

} // namespace zkmap
