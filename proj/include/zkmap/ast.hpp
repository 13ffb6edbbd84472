// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "zkmap/span.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace zkmap {

using NodeId = uint32_t;

enum class NodeKind : uint8_t {
    File,
    Contract,
    StateVar,
    Function,
    Modifier,
    Event,
    Param,
    Block,
    VarDeclStmt,
    AssignStmt,
    IfStmt,
    WhileStmt,
    ForStmt,
    RequireStmt,
    EmitStmt,
    ReturnStmt,
    ExprStmt,
    PlaceholderStmt,
    BinaryExpr,
    UnaryExpr,
    CallExpr,
    IndexExpr,
    IdentExpr,
    NumberExpr,
    BoolExpr,
    StringExpr,
    SenderExpr,
    ModInvoke,
};

enum class TypeKind : uint8_t { Uint, Bool, Address, Mapping, Void };

/// MiniSol type. Mappings carry a scalar key kind and a value type; nested
/// mapping values parse but are rejected during resolution.
struct Type {
    TypeKind kind = TypeKind::Void;
    TypeKind key = TypeKind::Uint;          // mapping key (scalar only)
    std::shared_ptr<Type> value;            // mapping value

    static Type scalar(TypeKind k) { return Type{k, TypeKind::Uint, nullptr}; }
    bool is_scalar() const {
        return kind == TypeKind::Uint || kind == TypeKind::Bool || kind == TypeKind::Address;
    }
    bool same_scalar(const Type& o) const { return is_scalar() && kind == o.kind; }
};

std::string type_name(const Type& t);

enum class Visibility : uint8_t { External, Internal };

enum class BinOp : uint8_t {
    Or, And,                         // logical, short-circuit
    Eq, Ne, Lt, Gt, Le, Ge,
    BitOr, BitXor, BitAnd, Shl, Shr,
    Add, Sub, Mul, Div, Mod,
};

enum class UnOp : uint8_t { Not, Neg };

struct FileData { std::vector<NodeId> contracts; };
struct ContractData { std::string name; std::vector<NodeId> members; };
struct StateVarData { std::string name; NodeId type = 0; std::optional<NodeId> init; };
struct FunctionData {
    std::string name;
    std::vector<NodeId> params;
    std::vector<NodeId> mod_invokes;
    Visibility vis = Visibility::External;
    std::optional<Type> ret;
    NodeId body = 0;
    SourceSpan header_span; // 'function' through the end of the signature
};
struct ModifierData { std::string name; std::vector<NodeId> params; NodeId body = 0; };
struct EventData { std::string name; std::vector<NodeId> params; };
struct ParamData { std::string name; Type type; };
struct BlockData { std::vector<NodeId> stmts; };
struct VarDeclData { std::string name; Type type; NodeId init = 0; };
struct AssignData { NodeId target = 0; NodeId value = 0; };
struct IfData { NodeId cond = 0; NodeId then_branch = 0; std::optional<NodeId> else_branch; };
struct WhileData { NodeId cond = 0; NodeId body = 0; };
struct ForData {
    std::optional<NodeId> init;   // VarDeclStmt or AssignStmt
    std::optional<NodeId> cond;
    std::optional<NodeId> update; // AssignStmt without trailing ';'
    NodeId body = 0;
};
struct RequireData { NodeId cond = 0; std::string message; bool has_message = false; };
struct EmitData { std::string event_name; SourceSpan name_span; std::vector<NodeId> args; };
struct ReturnData { std::optional<NodeId> value; };
struct ExprStmtData { NodeId expr = 0; };
struct PlaceholderData {};
struct BinaryData { BinOp op = BinOp::Add; NodeId lhs = 0; NodeId rhs = 0; };
struct UnaryData { UnOp op = UnOp::Not; NodeId operand = 0; };
struct CallData { std::string callee; SourceSpan callee_span; std::vector<NodeId> args; };
struct IndexData { NodeId base = 0; NodeId index = 0; };
struct IdentData { std::string name; };
struct NumberData { uint64_t value = 0; };
struct BoolData { bool value = false; };
struct StringData { std::string value; };
struct SenderData {};
struct ModInvokeData { std::string name; SourceSpan name_span; std::vector<NodeId> args; };

using NodeData = std::variant<
    FileData, ContractData, StateVarData, FunctionData, ModifierData, EventData, ParamData,
    BlockData, VarDeclData, AssignData, IfData, WhileData, ForData, RequireData, EmitData,
    ReturnData, ExprStmtData, PlaceholderData, BinaryData, UnaryData, CallData, IndexData,
    IdentData, NumberData, BoolData, StringData, SenderData, ModInvokeData>;

/// Resolved binding of an identifier-like node.
struct StateVarRef { uint32_t contract = 0; uint32_t index = 0; };
struct LocalRef { NodeId decl = 0; };
struct ParamRef { NodeId owner = 0; uint32_t index = 0; };
struct FnRef { uint32_t contract = 0; uint32_t index = 0; };
struct ModifierRef { uint32_t contract = 0; uint32_t index = 0; };
struct EventRef { uint32_t contract = 0; uint32_t index = 0; };
using Resolved = std::variant<std::monostate, StateVarRef, LocalRef, ParamRef, FnRef,
                              ModifierRef, EventRef>;

struct AstNode {
    NodeKind kind = NodeKind::File;
    NodeId id = 0;
    SourceSpan span;
    NodeData data;
    Resolved resolved;
    std::optional<uint32_t> statement_id; // stamped by the statement registry
    Type expr_type;                       // computed during type checking

    template <typename T> T& as() { return std::get<T>(data); }
    template <typename T> const T& as() const { return std::get<T>(data); }
};

/// Node arena. Node ids are dense and assigned in pre-order: a node's id is
/// reserved before its children are parsed, so identical input always yields
/// identical ids.
struct Ast {
    std::vector<AstNode> nodes;

    AstNode& operator[](NodeId id) { return nodes[id]; }
    const AstNode& operator[](NodeId id) const { return nodes[id]; }
    NodeId root() const { return 0; }
};

} // namespace zkmap
