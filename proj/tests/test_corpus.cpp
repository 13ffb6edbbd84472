// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "support.hpp"

using namespace zkmap;
using namespace zkmap::test;

TEST_CASE("corpus: identity pipeline aligns perfectly and twins agree") {
    for (const auto& [stem, text] : corpus()) {
        CAPTURE(stem);
        Compilation c = compile_source(stem + ".msol", text, PassConfig::none());
        TxSuite suite = fixture_suite(stem);

        TwinRunResult twin = run_twin(c, suite);
        for (const auto& m : twin.mismatches)
            MESSAGE(stem, " tx ", m.tx_index, ": ", m.detail);
        for (const auto& f : twin.expect_failures)
            MESSAGE(stem, ": ", f);
        CHECK(twin.ok());

        AccuracyResult acc = measure_accuracy(c, suite, stem);
        CHECK_MESSAGE(acc.accuracy_pct == 100.0, stem, ": ", acc.matched_events, "/",
                      acc.mapped_events);
        CHECK(acc.coverage_warnings.empty());
    }
}

TEST_CASE("corpus: twin equivalence across the config matrix") {
    for (const auto& [stem, text] : corpus()) {
        TxSuite suite = fixture_suite(stem);
        for (const auto& [cfg_name, config] : config_matrix()) {
            CAPTURE(stem);
            CAPTURE(cfg_name);
            Compilation c = compile_source(stem + ".msol", text, config);
            TwinRunResult twin = run_twin(c, suite);
            for (const auto& m : twin.mismatches)
                MESSAGE(stem, "/", cfg_name, " tx ", m.tx_index, ": ", m.detail);
            for (const auto& f : twin.expect_failures)
                MESSAGE(stem, "/", cfg_name, ": ", f);
            CHECK(twin.ok());
        }
    }
}

TEST_CASE("corpus: optimized accuracy stays within the calibration band") {
    AccuracyReport report;
    for (const auto& [stem, text] : corpus()) {
        CAPTURE(stem);
        Compilation c = compile_source(stem + ".msol", text, PassConfig{});
        AccuracyResult acc = measure_accuracy(c, fixture_suite(stem), stem);
        MESSAGE(stem, ": ", acc.accuracy_pct, "% (", acc.matched_events, "/", acc.mapped_events,
                ")");
        CHECK(acc.accuracy_pct >= 90.0);
        report.add(acc);
    }
    MESSAGE("aggregate: ", report.aggregate_pct, "%");
    CHECK(report.aggregate_pct >= 96.0);
}
