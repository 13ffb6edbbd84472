// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "zkmap/compiler.hpp"
#include "zkmap/metrics.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace zkmap::test {

inline std::string fixture_dir() { return ZKMAP_FIXTURE_DIR; }

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), "cannot open ", path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline std::string fixture_text(const std::string& name) {
    return read_file(fixture_dir() + "/" + name);
}

/// All corpus fixtures: (stem, source text), sorted by name.
inline std::vector<std::pair<std::string, std::string>> corpus() {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& entry : std::filesystem::directory_iterator(fixture_dir())) {
        if (entry.path().extension() == ".msol")
            out.emplace_back(entry.path().stem().string(), read_file(entry.path().string()));
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline TxSuite fixture_suite(const std::string& stem) {
    return load_tx_suite(fixture_dir() + "/" + stem + ".txs.json");
}

inline Compilation compile_fixture(const std::string& stem,
                                   const PassConfig& config = PassConfig::none()) {
    return compile_source(stem + ".msol", fixture_text(stem + ".msol"), config);
}

/// The validation matrix from the acceptance criteria: no-opt, four single
/// passes, and the default pipeline.
inline std::vector<std::pair<std::string, PassConfig>> config_matrix() {
    return {
        {"none", PassConfig::none()},
        {"const_fold", PassConfig::single(PassKind::ConstFold)},
        {"dce", PassConfig::single(PassKind::Dce)},
        {"reorder", PassConfig::single(PassKind::Reorder)},
        {"cfg_restructure", PassConfig::single(PassKind::CfgRestructure)},
        {"default", PassConfig{}},
    };
}

} // namespace zkmap::test
