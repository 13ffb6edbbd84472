// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "zkmap/unit.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace zkmap {

struct Storage {
    std::map<uint32_t, uint64_t> scalars;
    std::map<std::pair<uint32_t, uint64_t>, uint64_t> keyed;

    uint64_t read(uint32_t slot) const;
    uint64_t read(uint32_t slot, uint64_t key) const;
    void write(uint32_t slot, uint64_t value);
    void write(uint32_t slot, uint64_t key, uint64_t value);
    /// Zero-valued cells compare equal to absent cells.
    Storage normalized() const;

    friend bool operator==(const Storage& a, const Storage& b) {
        auto na = a.normalized(), nb = b.normalized();
        return na.scalars == nb.scalars && na.keyed == nb.keyed;
    }
};

struct EventRecord {
    std::string name;
    std::vector<uint64_t> args;
    friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

/// Outcome of one transaction. A revert rolls the whole transaction back:
/// storage equals the pre-state and no events survive.
struct ExecResult {
    bool reverted = false;
    std::optional<uint64_t> value;
    std::string revert_message;
    Storage storage;
    std::vector<EventRecord> events;

    friend bool operator==(const ExecResult& a, const ExecResult& b) {
        return a.reverted == b.reverted && a.value == b.value &&
               a.revert_message == b.revert_message && a.storage == b.storage &&
               a.events == b.events;
    }
    std::string describe() const;
};

struct TxInput {
    std::string function;
    std::vector<uint64_t> args;
    uint64_t sender = 0;
    std::optional<Storage> initial_storage;

    std::string dispatch_key() const {
        return function + "/" + std::to_string(args.size());
    }
};

struct InterpOutcome {
    ExecResult result;
    /// One event per statement entry or resumption, in execution order.
    std::vector<uint32_t> statement_trace;
};

inline constexpr uint64_t kInterpStepLimit = 1'000'000;

/// Reference interpreter: executes MiniSol semantics directly on the
/// resolved AST (64-bit wrapping arithmetic, modifier splicing,
/// require/division reverts). Ground truth for the twin-execution oracle.
InterpOutcome interpret_source(const CompilationUnit& unit, const TxInput& tx,
                               const Storage& storage);

} // namespace zkmap
