// SPDX-License-Identifier: Apache-2.0
#include "zkmap/parser.hpp"

#include "zkmap/diag.hpp"

#include <charconv>
#include <map>

namespace zkmap {

namespace {

SourceSpan hull(const SourceSpan& a, const SourceSpan& b) {
    SourceSpan s;
    s.file = a.file;
    s.start = std::min(a.start, b.start);
    s.length = std::max(a.end(), b.end()) - s.start;
    return s;
}

class Parser {
public:
    explicit Parser(const std::vector<Token>& tokens) : tokens_(tokens) {}

    Ast run() {
        NodeId file = alloc(NodeKind::File);
        FileData data;
        SourceSpan first = cur().span;
        while (!at_eof())
            data.contracts.push_back(parse_contract());
        finish(file, hull(first, prev_span()), std::move(data));
        return std::move(ast_);
    }

private:
    const Token& cur() const { return tokens_[pos_]; }
    const Token& peek(size_t n = 1) const {
        size_t i = std::min(pos_ + n, tokens_.size() - 1);
        return tokens_[i];
    }
    bool at_eof() const { return cur().kind == TokenKind::Eof; }
    SourceSpan prev_span() const { return pos_ > 0 ? tokens_[pos_ - 1].span : cur().span; }

    const Token& advance() { return tokens_[pos_++]; }

    bool accept_punct(const char* text) {
        if (cur().is_punct(text)) {
            ++pos_;
            return true;
        }
        return false;
    }
    bool accept_keyword(const char* text) {
        if (cur().is_keyword(text)) {
            ++pos_;
            return true;
        }
        return false;
    }
    const Token& expect_punct(const char* text) {
        if (!cur().is_punct(text))
            fail(std::string("expected '") + text + "'");
        return advance();
    }
    const Token& expect_keyword(const char* text) {
        if (!cur().is_keyword(text))
            fail(std::string("expected '") + text + "'");
        return advance();
    }
    const Token& expect_ident() {
        if (cur().kind != TokenKind::Ident)
            fail("expected identifier");
        return advance();
    }

    [[noreturn]] void fail(const std::string& expected) const {
        throw CompileError(ErrorCode::SyntaxError, cur().span,
                           expected + ", found '" + (at_eof() ? "<eof>" : cur().text) + "'");
    }

    NodeId alloc(NodeKind kind) {
        NodeId id = static_cast<NodeId>(ast_.nodes.size());
        AstNode n;
        n.kind = kind;
        n.id = id;
        ast_.nodes.push_back(std::move(n));
        return id;
    }
    template <typename T>
    void finish(NodeId id, SourceSpan span, T&& data) {
        ast_.nodes[id].span = span;
        ast_.nodes[id].data = std::forward<T>(data);
    }

    bool at_type() const {
        return cur().is_keyword("uint") || cur().is_keyword("bool") ||
               cur().is_keyword("address") || cur().is_keyword("mapping");
    }

    Type parse_type() {
        if (accept_keyword("uint"))
            return Type::scalar(TypeKind::Uint);
        if (accept_keyword("bool"))
            return Type::scalar(TypeKind::Bool);
        if (accept_keyword("address"))
            return Type::scalar(TypeKind::Address);
        if (accept_keyword("mapping")) {
            expect_punct("(");
            Type key = parse_type();
            expect_punct("=>");
            Type value = parse_type();
            expect_punct(")");
            Type t;
            t.kind = TypeKind::Mapping;
            t.key = key.kind; // scalar-ness checked during resolution
            t.value = std::make_shared<Type>(value);
            return t;
        }
        fail("expected type");
    }

    NodeId parse_contract() {
        NodeId id = alloc(NodeKind::Contract);
        SourceSpan start = expect_keyword("contract").span;
        ContractData data;
        data.name = expect_ident().text;
        expect_punct("{");
        while (!accept_punct("}")) {
            if (at_eof())
                fail("expected contract member or '}'");
            data.members.push_back(parse_member());
        }
        finish(id, hull(start, prev_span()), std::move(data));
        return id;
    }

    NodeId parse_member() {
        if (cur().is_keyword("function"))
            return parse_function();
        if (cur().is_keyword("modifier"))
            return parse_modifier();
        if (cur().is_keyword("event"))
            return parse_event();
        if (at_type())
            return parse_state_var();
        fail("expected state variable, function, modifier or event");
    }

    NodeId parse_state_var() {
        NodeId id = alloc(NodeKind::StateVar);
        SourceSpan start = cur().span;
        StateVarData data;
        NodeId type_node = alloc(NodeKind::Param); // reuse Param payload for the type holder
        SourceSpan tstart = cur().span;
        Type t = parse_type();
        finish(type_node, hull(tstart, prev_span()), ParamData{"", t});
        data.type = type_node;
        data.name = expect_ident().text;
        if (accept_punct("="))
            data.init = parse_expr();
        expect_punct(";");
        finish(id, hull(start, prev_span()), std::move(data));
        return id;
    }

    std::vector<NodeId> parse_param_list() {
        std::vector<NodeId> params;
        if (cur().is_punct(")"))
            return params;
        while (true) {
            NodeId p = alloc(NodeKind::Param);
            SourceSpan start = cur().span;
            Type t = parse_type();
            std::string name = expect_ident().text;
            finish(p, hull(start, prev_span()), ParamData{std::move(name), t});
            params.push_back(p);
            if (!accept_punct(","))
                break;
        }
        return params;
    }

    NodeId parse_function() {
        NodeId id = alloc(NodeKind::Function);
        SourceSpan start = expect_keyword("function").span;
        FunctionData data;
        data.name = expect_ident().text;
        expect_punct("(");
        data.params = parse_param_list();
        expect_punct(")");
        while (cur().kind == TokenKind::Ident)
            data.mod_invokes.push_back(parse_mod_invoke());
        if (accept_keyword("internal"))
            data.vis = Visibility::Internal;
        else if (accept_keyword("external"))
            data.vis = Visibility::External;
        if (accept_keyword("returns")) {
            expect_punct("(");
            data.ret = parse_type();
            expect_punct(")");
        }
        data.header_span = hull(start, prev_span());
        data.body = parse_block();
        finish(id, hull(start, prev_span()), std::move(data));
        return id;
    }

    NodeId parse_mod_invoke() {
        NodeId id = alloc(NodeKind::ModInvoke);
        const Token& name = expect_ident();
        ModInvokeData data;
        data.name = name.text;
        data.name_span = name.span;
        if (accept_punct("(")) {
            if (!cur().is_punct(")")) {
                while (true) {
                    data.args.push_back(parse_expr());
                    if (!accept_punct(","))
                        break;
                }
            }
            expect_punct(")");
        }
        finish(id, hull(name.span, prev_span()), std::move(data));
        return id;
    }

    NodeId parse_modifier() {
        NodeId id = alloc(NodeKind::Modifier);
        SourceSpan start = expect_keyword("modifier").span;
        ModifierData data;
        data.name = expect_ident().text;
        if (accept_punct("(")) {
            data.params = parse_param_list();
            expect_punct(")");
        }
        data.body = parse_block();
        finish(id, hull(start, prev_span()), std::move(data));
        return id;
    }

    NodeId parse_event() {
        NodeId id = alloc(NodeKind::Event);
        SourceSpan start = expect_keyword("event").span;
        EventData data;
        data.name = expect_ident().text;
        expect_punct("(");
        data.params = parse_param_list();
        expect_punct(")");
        expect_punct(";");
        finish(id, hull(start, prev_span()), std::move(data));
        return id;
    }

    NodeId parse_block() {
        NodeId id = alloc(NodeKind::Block);
        SourceSpan start = expect_punct("{").span;
        BlockData data;
        while (!cur().is_punct("}")) {
            if (at_eof())
                fail("expected statement or '}'");
            data.stmts.push_back(parse_stmt());
        }
        expect_punct("}");
        finish(id, hull(start, prev_span()), std::move(data));
        return id;
    }

    NodeId parse_stmt() {
        if (cur().is_punct("{"))
            return parse_block();
        if (cur().is_keyword("_")) {
            NodeId id = alloc(NodeKind::PlaceholderStmt);
            SourceSpan start = advance().span;
            expect_punct(";");
            finish(id, hull(start, prev_span()), PlaceholderData{});
            return id;
        }
        if (cur().is_keyword("if"))
            return parse_if();
        if (cur().is_keyword("while"))
            return parse_while();
        if (cur().is_keyword("for"))
            return parse_for();
        if (cur().is_keyword("require"))
            return parse_require();
        if (cur().is_keyword("emit"))
            return parse_emit();
        if (cur().is_keyword("return"))
            return parse_return();
        if (at_type())
            return parse_var_decl(true);
        return parse_assign_or_expr_stmt(true);
    }

    NodeId parse_var_decl(bool consume_semi) {
        NodeId id = alloc(NodeKind::VarDeclStmt);
        SourceSpan start = cur().span;
        VarDeclData data;
        data.type = parse_type();
        data.name = expect_ident().text;
        expect_punct("=");
        data.init = parse_expr();
        if (consume_semi)
            expect_punct(";");
        finish(id, hull(start, prev_span()), std::move(data));
        return id;
    }

    // Either `lvalue = expr` or a bare expression statement.
    NodeId parse_assign_or_expr_stmt(bool consume_semi) {
        NodeId id = alloc(NodeKind::ExprStmt);
        SourceSpan start = cur().span;
        NodeId expr = parse_expr();
        if (cur().is_punct("=")) {
            const AstNode& target = ast_[expr];
            if (target.kind != NodeKind::IdentExpr && target.kind != NodeKind::IndexExpr)
                throw CompileError(ErrorCode::SyntaxError, target.span,
                                   "assignment target must be a variable or index expression");
            advance();
            AssignData data;
            data.target = expr;
            data.value = parse_expr();
            if (consume_semi)
                expect_punct(";");
            ast_[id].kind = NodeKind::AssignStmt;
            finish(id, hull(start, prev_span()), std::move(data));
            return id;
        }
        if (consume_semi)
            expect_punct(";");
        finish(id, hull(start, prev_span()), ExprStmtData{expr});
        return id;
    }

    NodeId parse_if() {
        NodeId id = alloc(NodeKind::IfStmt);
        SourceSpan start = expect_keyword("if").span;
        IfData data;
        expect_punct("(");
        data.cond = parse_expr();
        expect_punct(")");
        data.then_branch = parse_stmt();
        if (accept_keyword("else"))
            data.else_branch = parse_stmt();
        finish(id, hull(start, prev_span()), std::move(data));
        return id;
    }

    NodeId parse_while() {
        NodeId id = alloc(NodeKind::WhileStmt);
        SourceSpan start = expect_keyword("while").span;
        WhileData data;
        expect_punct("(");
        data.cond = parse_expr();
        expect_punct(")");
        data.body = parse_stmt();
        finish(id, hull(start, prev_span()), std::move(data));
        return id;
    }

    NodeId parse_for() {
        NodeId id = alloc(NodeKind::ForStmt);
        SourceSpan start = expect_keyword("for").span;
        ForData data;
        expect_punct("(");
        if (!accept_punct(";")) {
            if (at_type())
                data.init = parse_var_decl(true);
            else
                data.init = parse_assign_or_expr_stmt(true);
        }
        if (!cur().is_punct(";"))
            data.cond = parse_expr();
        expect_punct(";");
        if (!cur().is_punct(")"))
            data.update = parse_assign_or_expr_stmt(false);
        expect_punct(")");
        data.body = parse_stmt();
        finish(id, hull(start, prev_span()), std::move(data));
        return id;
    }

    NodeId parse_require() {
        NodeId id = alloc(NodeKind::RequireStmt);
        SourceSpan start = expect_keyword("require").span;
        RequireData data;
        expect_punct("(");
        data.cond = parse_expr();
        if (accept_punct(",")) {
            if (cur().kind != TokenKind::String)
                fail("expected string literal");
            data.message = unescape(advance().text);
            data.has_message = true;
        }
        expect_punct(")");
        expect_punct(";");
        finish(id, hull(start, prev_span()), std::move(data));
        return id;
    }

    NodeId parse_emit() {
        NodeId id = alloc(NodeKind::EmitStmt);
        SourceSpan start = expect_keyword("emit").span;
        EmitData data;
        const Token& name = expect_ident();
        data.event_name = name.text;
        data.name_span = name.span;
        expect_punct("(");
        if (!cur().is_punct(")")) {
            while (true) {
                data.args.push_back(parse_expr());
                if (!accept_punct(","))
                    break;
            }
        }
        expect_punct(")");
        expect_punct(";");
        finish(id, hull(start, prev_span()), std::move(data));
        return id;
    }

    NodeId parse_return() {
        NodeId id = alloc(NodeKind::ReturnStmt);
        SourceSpan start = expect_keyword("return").span;
        ReturnData data;
        if (!cur().is_punct(";"))
            data.value = parse_expr();
        expect_punct(";");
        finish(id, hull(start, prev_span()), std::move(data));
        return id;
    }

    // --- expressions -----------------------------------------------------

    struct OpLevel {
        std::vector<std::pair<const char*, BinOp>> ops;
    };

    NodeId parse_expr() { return parse_binary(0); }

    NodeId parse_binary(size_t level) {
        static const std::vector<OpLevel> levels = {
            {{{"||", BinOp::Or}}},
            {{{"&&", BinOp::And}}},
            {{{"==", BinOp::Eq}, {"!=", BinOp::Ne}}},
            {{{"<=", BinOp::Le}, {">=", BinOp::Ge}, {"<", BinOp::Lt}, {">", BinOp::Gt}}},
            {{{"|", BinOp::BitOr}}},
            {{{"^", BinOp::BitXor}}},
            {{{"&", BinOp::BitAnd}}},
            {{{"<<", BinOp::Shl}, {">>", BinOp::Shr}}},
            {{{"+", BinOp::Add}, {"-", BinOp::Sub}}},
            {{{"*", BinOp::Mul}, {"/", BinOp::Div}, {"%", BinOp::Mod}}},
        };
        if (level >= levels.size())
            return parse_unary();
        NodeId lhs = parse_binary(level + 1);
        while (true) {
            const BinOp* matched = nullptr;
            for (const auto& [text, op] : levels[level].ops) {
                if (cur().is_punct(text)) {
                    matched = &op;
                    break;
                }
            }
            if (!matched)
                return lhs;
            advance();
            NodeId rhs = parse_binary(level + 1);
            NodeId id = alloc(NodeKind::BinaryExpr);
            finish(id, hull(ast_[lhs].span, ast_[rhs].span), BinaryData{*matched, lhs, rhs});
            lhs = id;
        }
    }

    NodeId parse_unary() {
        if (cur().is_punct("!") || cur().is_punct("-")) {
            UnOp op = cur().is_punct("!") ? UnOp::Not : UnOp::Neg;
            SourceSpan start = advance().span;
            NodeId operand = parse_unary();
            NodeId id = alloc(NodeKind::UnaryExpr);
            finish(id, hull(start, ast_[operand].span), UnaryData{op, operand});
            return id;
        }
        return parse_postfix();
    }

    NodeId parse_postfix() {
        NodeId expr = parse_primary();
        while (true) {
            if (cur().is_punct("(") && ast_[expr].kind == NodeKind::IdentExpr) {
                NodeId id = alloc(NodeKind::CallExpr);
                CallData data;
                data.callee = ast_[expr].as<IdentData>().name;
                data.callee_span = ast_[expr].span;
                advance();
                if (!cur().is_punct(")")) {
                    while (true) {
                        data.args.push_back(parse_expr());
                        if (!accept_punct(","))
                            break;
                    }
                }
                expect_punct(")");
                finish(id, hull(ast_[expr].span, prev_span()), std::move(data));
                expr = id;
            } else if (cur().is_punct("[")) {
                NodeId id = alloc(NodeKind::IndexExpr);
                advance();
                NodeId index = parse_expr();
                expect_punct("]");
                finish(id, hull(ast_[expr].span, prev_span()), IndexData{expr, index});
                expr = id;
            } else {
                return expr;
            }
        }
    }

    NodeId parse_primary() {
        const Token& t = cur();
        if (t.kind == TokenKind::Number) {
            NodeId id = alloc(NodeKind::NumberExpr);
            advance();
            uint64_t value = 0;
            bool hex = t.text.size() > 2 && (t.text[1] == 'x' || t.text[1] == 'X');
            const char* begin = t.text.data() + (hex ? 2 : 0);
            const char* end = t.text.data() + t.text.size();
            auto [ptr, ec] = std::from_chars(begin, end, value, hex ? 16 : 10);
            if (ec != std::errc() || ptr != end)
                throw CompileError(ErrorCode::SyntaxError, t.span, "number literal out of range");
            finish(id, t.span, NumberData{value});
            return id;
        }
        if (t.is_keyword("true") || t.is_keyword("false")) {
            NodeId id = alloc(NodeKind::BoolExpr);
            advance();
            finish(id, t.span, BoolData{t.text == "true"});
            return id;
        }
        if (t.kind == TokenKind::String) {
            NodeId id = alloc(NodeKind::StringExpr);
            advance();
            finish(id, t.span, StringData{unescape(t.text)});
            return id;
        }
        if (t.is_keyword("msg")) {
            NodeId id = alloc(NodeKind::SenderExpr);
            SourceSpan start = advance().span;
            expect_punct(".");
            const Token& field = expect_ident();
            if (field.text != "sender")
                throw CompileError(ErrorCode::SyntaxError, field.span,
                                   "only 'msg.sender' is supported");
            finish(id, hull(start, field.span), SenderData{});
            return id;
        }
        if (t.kind == TokenKind::Ident) {
            NodeId id = alloc(NodeKind::IdentExpr);
            advance();
            finish(id, t.span, IdentData{t.text});
            return id;
        }
        if (t.is_punct("(")) {
            SourceSpan open = advance().span;
            NodeId inner = parse_expr();
            SourceSpan close = expect_punct(")").span;
            // widen the node's span so the parens belong to it
            ast_[inner].span = hull(open, close);
            return inner;
        }
        fail("expected expression");
    }

    static std::string unescape(const std::string& raw) {
        // raw includes the surrounding quotes
        std::string out;
        for (size_t i = 1; i + 1 < raw.size(); ++i) {
            char c = raw[i];
            if (c == '\\' && i + 2 < raw.size()) {
                char n = raw[++i];
                switch (n) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                default: out += n; break;
                }
            } else {
                out += c;
            }
        }
        return out;
    }

    const std::vector<Token>& tokens_;
    size_t pos_ = 0;
    Ast ast_;
};

void renumber_preorder(Ast& ast) {
    // Pre-order walk; nodes no longer referenced (e.g. callee idents folded
    // into CallExpr) are dropped.
    std::vector<NodeId> order;
    order.reserve(ast.nodes.size());
    std::function<void(NodeId)> walk = [&](NodeId id) {
        order.push_back(id);
        for_each_child(ast[id], [&](NodeId child) { walk(child); });
    };
    walk(ast.root());

    std::vector<NodeId> old_to_new(ast.nodes.size(), 0);
    for (NodeId i = 0; i < order.size(); ++i)
        old_to_new[order[i]] = i;

    std::vector<AstNode> nodes(order.size());
    for (NodeId new_id = 0; new_id < order.size(); ++new_id) {
        NodeId old_id = order[new_id];
        AstNode n = std::move(ast.nodes[old_id]);
        n.id = old_to_new[old_id];
        auto remap = [&](NodeId& slot) { slot = old_to_new[slot]; };
        std::visit(
            [&](auto& d) {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, FileData>)
                    for (auto& c : d.contracts) remap(c);
                else if constexpr (std::is_same_v<T, ContractData>)
                    for (auto& c : d.members) remap(c);
                else if constexpr (std::is_same_v<T, StateVarData>) {
                    remap(d.type);
                    if (d.init) remap(*d.init);
                } else if constexpr (std::is_same_v<T, FunctionData>) {
                    for (auto& c : d.params) remap(c);
                    for (auto& c : d.mod_invokes) remap(c);
                    remap(d.body);
                } else if constexpr (std::is_same_v<T, ModifierData>) {
                    for (auto& c : d.params) remap(c);
                    remap(d.body);
                } else if constexpr (std::is_same_v<T, EventData>)
                    for (auto& c : d.params) remap(c);
                else if constexpr (std::is_same_v<T, BlockData>)
                    for (auto& c : d.stmts) remap(c);
                else if constexpr (std::is_same_v<T, VarDeclData>)
                    remap(d.init);
                else if constexpr (std::is_same_v<T, AssignData>) {
                    remap(d.target);
                    remap(d.value);
                } else if constexpr (std::is_same_v<T, IfData>) {
                    remap(d.cond);
                    remap(d.then_branch);
                    if (d.else_branch) remap(*d.else_branch);
                } else if constexpr (std::is_same_v<T, WhileData>) {
                    remap(d.cond);
                    remap(d.body);
                } else if constexpr (std::is_same_v<T, ForData>) {
                    if (d.init) remap(*d.init);
                    if (d.cond) remap(*d.cond);
                    if (d.update) remap(*d.update);
                    remap(d.body);
                } else if constexpr (std::is_same_v<T, RequireData>)
                    remap(d.cond);
                else if constexpr (std::is_same_v<T, EmitData>)
                    for (auto& c : d.args) remap(c);
                else if constexpr (std::is_same_v<T, ReturnData>) {
                    if (d.value) remap(*d.value);
                } else if constexpr (std::is_same_v<T, ExprStmtData>)
                    remap(d.expr);
                else if constexpr (std::is_same_v<T, BinaryData>) {
                    remap(d.lhs);
                    remap(d.rhs);
                } else if constexpr (std::is_same_v<T, UnaryData>)
                    remap(d.operand);
                else if constexpr (std::is_same_v<T, CallData>)
                    for (auto& c : d.args) remap(c);
                else if constexpr (std::is_same_v<T, IndexData>) {
                    remap(d.base);
                    remap(d.index);
                } else if constexpr (std::is_same_v<T, ModInvokeData>)
                    for (auto& c : d.args) remap(c);
            },
            n.data);
        nodes[new_id] = std::move(n);
    }
    ast.nodes = std::move(nodes);
}

} // namespace

void for_each_child(const AstNode& node, const std::function<void(NodeId)>& fn) {
    std::visit(
        [&](const auto& d) {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, FileData>)
                for (auto c : d.contracts) fn(c);
            else if constexpr (std::is_same_v<T, ContractData>)
                for (auto c : d.members) fn(c);
            else if constexpr (std::is_same_v<T, StateVarData>) {
                fn(d.type);
                if (d.init) fn(*d.init);
            } else if constexpr (std::is_same_v<T, FunctionData>) {
                for (auto c : d.params) fn(c);
                for (auto c : d.mod_invokes) fn(c);
                fn(d.body);
            } else if constexpr (std::is_same_v<T, ModifierData>) {
                for (auto c : d.params) fn(c);
                fn(d.body);
            } else if constexpr (std::is_same_v<T, EventData>)
                for (auto c : d.params) fn(c);
            else if constexpr (std::is_same_v<T, BlockData>)
                for (auto c : d.stmts) fn(c);
            else if constexpr (std::is_same_v<T, VarDeclData>)
                fn(d.init);
            else if constexpr (std::is_same_v<T, AssignData>) {
                fn(d.target);
                fn(d.value);
            } else if constexpr (std::is_same_v<T, IfData>) {
                fn(d.cond);
                fn(d.then_branch);
                if (d.else_branch) fn(*d.else_branch);
            } else if constexpr (std::is_same_v<T, WhileData>) {
                fn(d.cond);
                fn(d.body);
            } else if constexpr (std::is_same_v<T, ForData>) {
                if (d.init) fn(*d.init);
                if (d.cond) fn(*d.cond);
                if (d.update) fn(*d.update);
                fn(d.body);
            } else if constexpr (std::is_same_v<T, RequireData>)
                fn(d.cond);
            else if constexpr (std::is_same_v<T, EmitData>)
                for (auto c : d.args) fn(c);
            else if constexpr (std::is_same_v<T, ReturnData>) {
                if (d.value) fn(*d.value);
            } else if constexpr (std::is_same_v<T, ExprStmtData>)
                fn(d.expr);
            else if constexpr (std::is_same_v<T, BinaryData>) {
                fn(d.lhs);
                fn(d.rhs);
            } else if constexpr (std::is_same_v<T, UnaryData>)
                fn(d.operand);
            else if constexpr (std::is_same_v<T, CallData>)
                for (auto c : d.args) fn(c);
            else if constexpr (std::is_same_v<T, IndexData>) {
                fn(d.base);
                fn(d.index);
            } else if constexpr (std::is_same_v<T, ModInvokeData>)
                for (auto c : d.args) fn(c);
        },
        node.data);
}

Ast parse(const std::vector<Token>& tokens) {
    Ast ast = Parser(tokens).run();
    renumber_preorder(ast);
    return ast;
}

} // namespace zkmap
