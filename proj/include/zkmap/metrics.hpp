// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "zkmap/compiler.hpp"
#include "zkmap/interpreter.hpp"
#include "zkmap/vm.hpp"

#include <optional>
#include <string>
#include <vector>

namespace zkmap {

struct TxExpect {
    bool present = false;
    bool reverted = false;
    std::optional<uint64_t> value;
    std::string revert_message;
    std::optional<Storage> storage;
    std::optional<std::vector<EventRecord>> events;
};

struct TxCase {
    TxInput input;
    TxExpect expect;
};

/// Transactions run sequentially against shared storage, starting empty.
struct TxSuite {
    std::vector<TxCase> txs;
};

TxSuite parse_tx_suite(const std::string& json_text);
TxSuite load_tx_suite(const std::string& path);

struct TwinMismatch {
    size_t tx_index = 0;
    std::string detail;
};

struct TwinRunResult {
    std::vector<TwinMismatch> mismatches;      // interpreter vs VM
    std::vector<std::string> expect_failures;  // declared expectations
    bool ok() const { return mismatches.empty() && expect_failures.empty(); }
};

/// Execute the suite on both engines and compare ExecResults (status,
/// storage snapshot, events) transaction by transaction.
TwinRunResult run_twin(const Compilation& compilation, const TxSuite& suite);

struct AccuracyResult {
    std::string name;
    size_t executed_instructions = 0; // VM instruction events
    size_t mapped_events = 0;         // events with an entry and a statement
    size_t matched_events = 0;        // events whose statement aligns with the oracle
    size_t unmapped_events = 0;
    double accuracy_pct = 100.0;      // matched / mapped
    double unmapped_ratio_pct = 0.0;
    std::vector<std::string> coverage_warnings;
};

/// Mapping accuracy, computed against the twin-execution
/// oracle: VM instruction events are mapped to statements through the table
/// and aligned with the interpreter's statement trace by longest common
/// subsequence over the collapsed traces. Each raw event inherits the match
/// verdict of its collapsed representative.
AccuracyResult measure_accuracy(const Compilation& compilation, const TxSuite& suite,
                                const std::string& name);

struct AccuracyReport {
    std::vector<AccuracyResult> fixtures;
    size_t total_mapped = 0;
    size_t total_matched = 0;
    double aggregate_pct = 100.0;

    void add(AccuracyResult r);
};

struct OverheadResult {
    std::string name;
    double t_off_ms = 0;
    double t_on_ms = 0;
    double overhead_pct = 0;
    StageTimes stages_on;
    StageTimes stages_off;
    bool clock_warning = false; // inputs too small to time reliably
    bool bytecode_identical = true;
};

struct OverheadReport {
    std::vector<OverheadResult> sources;
    double aggregate_pct = 0;
    bool bytecode_identical = true;

    void add(OverheadResult r);
    void finish();
};

/// Median-of-repetitions wall-clock comparison of compilation with mapping
/// enabled vs disabled (identical pass pipeline). Compilations are batched
/// so a single measurement stays above clock resolution.
OverheadResult measure_overhead(const std::string& name, const std::string& text,
                                const PassConfig& config, size_t repetitions);

} // namespace zkmap
