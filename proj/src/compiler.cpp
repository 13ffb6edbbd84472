// SPDX-License-Identifier: Apache-2.0
#include "zkmap/compiler.hpp"

#include "zkmap/lowering.hpp"

#include <chrono>

namespace zkmap {

namespace {
double ms_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}
} // namespace

Compilation compile_source(const std::string& file_name, const std::string& text,
                           const PassConfig& config) {
    Compilation c;

    auto t0 = std::chrono::steady_clock::now();
    c.unit = run_frontend(file_name, text);
    LoweringOptions lopts;
    lopts.mapping_enabled = config.mapping_enabled;
    c.module = lower(c.unit, lopts);
    c.times.frontend_lowering_ms = ms_since(t0);

    auto t1 = std::chrono::steady_clock::now();
    c.pass_report = run_pipeline(c.module, config, c.unit);
    c.times.passes_ms = ms_since(t1);

    auto t2 = std::chrono::steady_clock::now();
    EmitResult emitted = emit(c.module);
    c.program = std::move(emitted.program);
    c.log = std::move(emitted.log);
    if (config.mapping_enabled) {
        BuildTableResult built =
            build_table(c.log, c.module, c.program, {c.unit.file_name});
        c.table = std::move(built.table);
        c.synthetic_excluded = built.synthetic_excluded;
    } else {
        c.table.files = {c.unit.file_name};
    }
    c.times.backend_mapgen_ms = ms_since(t2);
    return c;
}

CompiledArtifact make_artifact(const Compilation& c) {
    CompiledArtifact a;
    a.source_files.push_back({c.unit.file_name, c.unit.text});
    a.program = c.program;
    a.table = c.table;
    a.synthetic_excluded = c.synthetic_excluded;
    a.sourcemap_compressed = encode_compressed(c.table);
    return a;
}

} // namespace zkmap
