#include "foundry/ruledsl.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

namespace foundry::dsl {

const char* kind_name(Kind k) {
    switch (k) {
        case Kind::boolean: return "boolean";
        case Kind::integer: return "integer";
        case Kind::real: return "real";
        case Kind::string: return "string";
    }
    return "?";
}

Kind Value::kind() const {
    if (is_bool()) return Kind::boolean;
    if (is_int()) return Kind::integer;
    if (is_real()) return Kind::real;
    if (is_string()) return Kind::string;
    throw Error("NullKind", "null has no kind");
}

std::string Value::repr() const {
    if (is_null()) return "null";
    if (is_bool()) return as_bool() ? "TRUE" : "FALSE";
    if (is_int()) return std::to_string(as_int());
    if (is_real()) {
        std::ostringstream os;
        os << as_number();
        std::string s = os.str();
        // Keep reals visually distinct from integers in printed form.
        if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
            s.find("inf") == std::string::npos && s.find("nan") == std::string::npos) {
            s += ".0";
        }
        return s;
    }
    return "\"" + as_string() + "\"";
}

const char* compare_op_text(CompareOp op) {
    switch (op) {
        case CompareOp::gt: return ">";
        case CompareOp::ge: return ">=";
        case CompareOp::lt: return "<";
        case CompareOp::le: return "<=";
        case CompareOp::eq: return "==";
        case CompareOp::ne: return "!=";
    }
    return "?";
}

Expr Expr::make_field(std::string name) {
    Expr e;
    e.node = Node::field_ref;
    e.field = std::move(name);
    return e;
}

Expr Expr::make_compare(Operand lhs, CompareOp op, Operand rhs) {
    Expr e;
    e.node = Node::compare;
    e.lhs = std::move(lhs);
    e.op = op;
    e.rhs = std::move(rhs);
    return e;
}

Expr Expr::make_not(Expr inner) {
    Expr e;
    e.node = Node::neg;
    e.children.push_back(std::move(inner));
    return e;
}

static Expr make_nary(Expr::Node node, std::vector<Expr> children) {
    std::vector<Expr> flat;
    for (auto& c : children) {
        if (c.node == node) {
            for (auto& g : c.children) flat.push_back(std::move(g));
        } else {
            flat.push_back(std::move(c));
        }
    }
    if (flat.size() == 1) return std::move(flat.front());
    Expr e;
    e.node = node;
    e.children = std::move(flat);
    return e;
}

Expr Expr::make_conj(std::vector<Expr> children) { return make_nary(Node::conj, std::move(children)); }
Expr Expr::make_disj(std::vector<Expr> children) { return make_nary(Node::disj, std::move(children)); }

static bool operand_equal(const Operand& a, const Operand& b) {
    if (a.type != b.type) return false;
    if (a.type == Operand::Type::field) return a.field == b.field;
    return a.literal == b.literal;
}

bool structurally_equal(const Expr& a, const Expr& b) {
    if (a.node != b.node) return false;
    switch (a.node) {
        case Expr::Node::field_ref:
            return a.field == b.field;
        case Expr::Node::compare:
            return a.op == b.op && operand_equal(a.lhs, b.lhs) && operand_equal(a.rhs, b.rhs);
        default: {
            if (a.children.size() != b.children.size()) return false;
            for (std::size_t i = 0; i < a.children.size(); ++i) {
                if (!structurally_equal(a.children[i], b.children[i])) return false;
            }
            return true;
        }
    }
}

bool structurally_equal(const RuleChain& a, const RuleChain& b) {
    if (a.branches.size() != b.branches.size()) return false;
    for (std::size_t i = 0; i < a.branches.size(); ++i) {
        if (a.branches[i].verdict.code != b.branches[i].verdict.code) return false;
        if (!structurally_equal(a.branches[i].guard, b.branches[i].guard)) return false;
    }
    return a.default_verdict.code == b.default_verdict.code;
}

VerdictSet VerdictSet::standard() {
    VerdictSet v;
    v.add("APPROVED");
    v.add("DENIED");
    v.add("HUMAN_REVIEW");
    v.add("COMPLETED");
    v.add_alias("APPROVE", "APPROVED");
    v.add_alias("DENY", "DENIED");
    return v;
}

std::optional<std::string> VerdictSet::resolve(const std::string& code, bool* was_alias) const {
    if (was_alias) *was_alias = false;
    if (codes_.count(code)) return code;
    auto it = aliases_.find(code);
    if (it != aliases_.end()) {
        if (was_alias) *was_alias = true;
        return it->second;
    }
    return std::nullopt;
}

// --- lexer ------------------------------------------------------------------

namespace {

enum class Tok {
    kw_if, kw_then, kw_else, kw_and, kw_or, kw_not, kw_true, kw_false,
    ident, integer, real, string,
    gt, ge, lt, le, eq, ne, lparen, rparen,
    end
};

struct Token {
    Tok tok;
    std::string text;
    long long int_val = 0;
    double real_val = 0.0;
    int line = 1;
    int col = 1;
};

[[noreturn]] void syntax_error(int line, int col, const std::string& msg) {
    std::ostringstream os;
    os << "syntax error at line " << line << ", column " << col << ": " << msg;
    throw Error("SyntaxError", os.str());
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class Lexer {
public:
    explicit Lexer(const std::string& src) : src_(src) { advance(); }

    const Token& peek() const { return current_; }

    Token next() {
        Token t = current_;
        advance();
        return t;
    }

private:
    void advance() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) {
            bump();
        }
        current_.line = line_;
        current_.col = col_;
        if (pos_ >= src_.size()) {
            current_.tok = Tok::end;
            current_.text.clear();
            return;
        }
        char c = src_[pos_];
        if (ident_start(c)) {
            std::string word;
            while (pos_ < src_.size() && ident_char(src_[pos_])) {
                word.push_back(src_[pos_]);
                bump();
            }
            current_.text = word;
            if (word == "IF") current_.tok = Tok::kw_if;
            else if (word == "THEN") current_.tok = Tok::kw_then;
            else if (word == "ELSE") current_.tok = Tok::kw_else;
            else if (word == "AND") current_.tok = Tok::kw_and;
            else if (word == "OR") current_.tok = Tok::kw_or;
            else if (word == "NOT") current_.tok = Tok::kw_not;
            else if (word == "TRUE") current_.tok = Tok::kw_true;
            else if (word == "FALSE") current_.tok = Tok::kw_false;
            else current_.tok = Tok::ident;
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            lex_number();
            return;
        }
        switch (c) {
            case '"': lex_string(); return;
            case '(': bump(); current_.tok = Tok::lparen; current_.text = "("; return;
            case ')': bump(); current_.tok = Tok::rparen; current_.text = ")"; return;
            case '>':
                bump();
                if (pos_ < src_.size() && src_[pos_] == '=') { bump(); current_.tok = Tok::ge; current_.text = ">="; }
                else { current_.tok = Tok::gt; current_.text = ">"; }
                return;
            case '<':
                bump();
                if (pos_ < src_.size() && src_[pos_] == '=') { bump(); current_.tok = Tok::le; current_.text = "<="; }
                else { current_.tok = Tok::lt; current_.text = "<"; }
                return;
            case '=':
                bump();
                if (pos_ < src_.size() && src_[pos_] == '=') { bump(); current_.tok = Tok::eq; current_.text = "=="; return; }
                syntax_error(line_, col_, "expected '==' (single '=' is not an operator)");
            case '!':
                bump();
                if (pos_ < src_.size() && src_[pos_] == '=') { bump(); current_.tok = Tok::ne; current_.text = "!="; return; }
                syntax_error(line_, col_, "expected '!='");
            default:
                syntax_error(line_, col_, std::string("unexpected character '") + c + "'");
        }
    }

    void lex_number() {
        std::string num;
        bool is_real = false;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
            num.push_back(src_[pos_]);
            bump();
        }
        if (pos_ + 1 < src_.size() && src_[pos_] == '.' &&
            std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
            is_real = true;
            num.push_back('.');
            bump();
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                num.push_back(src_[pos_]);
                bump();
            }
        }
        if (pos_ < src_.size() && ident_start(src_[pos_])) {
            syntax_error(line_, col_, "malformed number '" + num + "'");
        }
        current_.text = num;
        if (is_real) {
            current_.tok = Tok::real;
            current_.real_val = std::stod(num);
        } else {
            current_.tok = Tok::integer;
            current_.int_val = std::stoll(num);
        }
    }

    void lex_string() {
        bump();  // opening quote
        std::string s;
        while (pos_ < src_.size() && src_[pos_] != '"') {
            if (src_[pos_] == '\n') syntax_error(line_, col_, "unterminated string literal");
            s.push_back(src_[pos_]);
            bump();
        }
        if (pos_ >= src_.size()) syntax_error(line_, col_, "unterminated string literal");
        bump();  // closing quote
        current_.tok = Tok::string;
        current_.text = s;
    }

    void bump() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    const std::string& src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
    Token current_;
};

// --- parser -----------------------------------------------------------------

class Parser {
public:
    explicit Parser(const std::string& src) : lex_(src) {}

    Expr parse_expression_only() {
        Expr e = parse_or();
        expect_end();
        return e;
    }

    RuleChain parse_chain(const VerdictSet& verdicts) {
        RuleChain chain;
        expect(Tok::kw_if, "expected IF");
        Expr guard = parse_or();
        expect(Tok::kw_then, "expected THEN");
        Verdict v = parse_verdict(verdicts, chain.notes);
        chain.branches.push_back({std::move(guard), std::move(v)});

        bool have_default = false;
        while (lex_.peek().tok == Tok::kw_else) {
            lex_.next();
            if (lex_.peek().tok == Tok::kw_if) {
                lex_.next();
                Expr g = parse_or();
                expect(Tok::kw_then, "expected THEN");
                Verdict bv = parse_verdict(verdicts, chain.notes);
                chain.branches.push_back({std::move(g), std::move(bv)});
            } else {
                chain.default_verdict = parse_verdict(verdicts, chain.notes);
                have_default = true;
                break;
            }
        }
        if (!have_default) {
            throw Error("MissingElse", "rule chain has no final ELSE branch; every chain "
                                       "must declare an explicit default verdict");
        }
        expect_end();
        return chain;
    }

private:
    Expr parse_or() {
        std::vector<Expr> terms;
        terms.push_back(parse_and());
        while (lex_.peek().tok == Tok::kw_or) {
            lex_.next();
            terms.push_back(parse_and());
        }
        return Expr::make_disj(std::move(terms));
    }

    Expr parse_and() {
        std::vector<Expr> terms;
        terms.push_back(parse_unary());
        while (lex_.peek().tok == Tok::kw_and) {
            lex_.next();
            terms.push_back(parse_unary());
        }
        return Expr::make_conj(std::move(terms));
    }

    Expr parse_unary() {
        if (lex_.peek().tok == Tok::kw_not) {
            lex_.next();
            return Expr::make_not(parse_unary());
        }
        return parse_primary();
    }

    Expr parse_primary() {
        const Token& t = lex_.peek();
        if (t.tok == Tok::lparen) {
            lex_.next();
            Expr inner = parse_or();
            expect(Tok::rparen, "expected ')'");
            return inner;
        }
        if (t.tok == Tok::ident) {
            Token name = lex_.next();
            if (auto op = peek_compare_op()) {
                lex_.next();
                Operand rhs = parse_comparison_rhs();
                return Expr::make_compare(Operand::make_field(name.text), *op, std::move(rhs));
            }
            return Expr::make_field(name.text);
        }
        if (t.tok == Tok::integer || t.tok == Tok::real || t.tok == Tok::string ||
            t.tok == Tok::kw_true || t.tok == Tok::kw_false) {
            // Comparisons are field-first; a bare literal is not a predicate.
            syntax_error(t.line, t.col, "expected a field reference, comparison or '('");
        }
        syntax_error(t.line, t.col, "expected expression, got '" + t.text + "'");
    }

    std::optional<CompareOp> peek_compare_op() {
        switch (lex_.peek().tok) {
            case Tok::gt: return CompareOp::gt;
            case Tok::ge: return CompareOp::ge;
            case Tok::lt: return CompareOp::lt;
            case Tok::le: return CompareOp::le;
            case Tok::eq: return CompareOp::eq;
            case Tok::ne: return CompareOp::ne;
            default: return std::nullopt;
        }
    }

    Operand parse_comparison_rhs() {
        Token t = lex_.next();
        switch (t.tok) {
            case Tok::ident: return Operand::make_field(t.text);
            case Tok::integer: return Operand::make_literal(Value(t.int_val));
            case Tok::real: return Operand::make_literal(Value(t.real_val));
            case Tok::string: return Operand::make_literal(Value(t.text));
            case Tok::kw_true: return Operand::make_literal(Value(true));
            case Tok::kw_false: return Operand::make_literal(Value(false));
            default:
                syntax_error(t.line, t.col, "expected literal or field after comparison operator");
        }
    }

    Verdict parse_verdict(const VerdictSet& verdicts, std::vector<std::string>& notes) {
        Token t = lex_.next();
        if (t.tok != Tok::ident) {
            syntax_error(t.line, t.col, "expected verdict code");
        }
        for (char c : t.text) {
            if (!(std::isupper(static_cast<unsigned char>(c)) ||
                  std::isdigit(static_cast<unsigned char>(c)) || c == '_')) {
                syntax_error(t.line, t.col,
                             "verdict code must be uppercase alphanumeric/underscore: '" + t.text + "'");
            }
        }
        bool was_alias = false;
        auto canonical = verdicts.resolve(t.text, &was_alias);
        if (!canonical) {
            throw Error("UnknownVerdict",
                        "verdict '" + t.text + "' is not in the declared verdict set");
        }
        if (was_alias) {
            notes.push_back("verdict alias '" + t.text + "' normalized to '" + *canonical + "'");
        }
        return Verdict{*canonical, ""};
    }

    void expect(Tok tok, const std::string& msg) {
        Token t = lex_.next();
        if (t.tok != tok) syntax_error(t.line, t.col, msg + ", got '" + t.text + "'");
    }

    void expect_end() {
        const Token& t = lex_.peek();
        if (t.tok != Tok::end) syntax_error(t.line, t.col, "unexpected trailing input '" + t.text + "'");
    }

    Lexer lex_;
};

}  // namespace

Expr parse_expr(const std::string& source) {
    return Parser(source).parse_expression_only();
}

RuleChain parse_rule(const std::string& source, const VerdictSet& verdicts) {
    if (verdicts.empty()) {
        throw Error("EmptyVerdictSet", "parse_rule requires a non-empty verdict set");
    }
    return Parser(source).parse_chain(verdicts);
}

// --- printer ----------------------------------------------------------------

namespace {

int precedence(const Expr& e) {
    switch (e.node) {
        case Expr::Node::disj: return 1;
        case Expr::Node::conj: return 2;
        case Expr::Node::neg: return 3;
        default: return 4;
    }
}

std::string print_operand(const Operand& o) {
    return o.type == Operand::Type::field ? o.field : o.literal.repr();
}

void print_expr(const Expr& e, int parent_prec, std::string& out) {
    const int prec = precedence(e);
    const bool parens = prec < parent_prec;
    if (parens) out += "(";
    switch (e.node) {
        case Expr::Node::field_ref:
            out += e.field;
            break;
        case Expr::Node::compare:
            out += print_operand(e.lhs);
            out += " ";
            out += compare_op_text(e.op);
            out += " ";
            out += print_operand(e.rhs);
            break;
        case Expr::Node::neg:
            out += "NOT ";
            print_expr(e.children.front(), precedence(e), out);
            break;
        case Expr::Node::conj:
        case Expr::Node::disj: {
            const char* sep = e.node == Expr::Node::conj ? " AND " : " OR ";
            for (std::size_t i = 0; i < e.children.size(); ++i) {
                if (i) out += sep;
                // Same-precedence children would re-flatten on parse, so no
                // parens needed; strictly lower precedence gets them.
                print_expr(e.children[i], prec + 1, out);
            }
            break;
        }
    }
    if (parens) out += ")";
}

}  // namespace

std::string print(const Expr& expr) {
    std::string out;
    print_expr(expr, 0, out);
    return out;
}

std::string print(const RuleChain& chain) {
    std::string out;
    for (std::size_t i = 0; i < chain.branches.size(); ++i) {
        out += i == 0 ? "IF " : "ELSE IF ";
        out += print(chain.branches[i].guard);
        out += " THEN ";
        out += chain.branches[i].verdict.code;
        out += "\n";
    }
    out += "ELSE ";
    out += chain.default_verdict.code;
    return out;
}

// --- typecheck ----------------------------------------------------------------

namespace {

bool numeric(Kind k) { return k == Kind::integer || k == Kind::real; }
bool equality_op(CompareOp op) { return op == CompareOp::eq || op == CompareOp::ne; }

std::optional<Kind> operand_kind(Operand& o, const TypeEnv& env,
                                 std::vector<TypeDiagnostic>& diags) {
    if (o.type == Operand::Type::literal) {
        return o.literal.kind();
    }
    auto it = env.find(o.field);
    if (it == env.end()) {
        diags.push_back({o.field, "unknown field '" + o.field + "'"});
        return std::nullopt;
    }
    o.resolved_kind = it->second;
    return it->second;
}

void check_expr(Expr& e, const TypeEnv& env, std::vector<TypeDiagnostic>& diags) {
    switch (e.node) {
        case Expr::Node::field_ref: {
            auto it = env.find(e.field);
            if (it == env.end()) {
                diags.push_back({e.field, "unknown field '" + e.field + "'"});
                return;
            }
            e.resolved_kind = it->second;
            if (it->second != Kind::boolean) {
                diags.push_back({e.field, "field '" + e.field + "' used as a bare predicate but has kind " +
                                              kind_name(it->second)});
            }
            return;
        }
        case Expr::Node::compare: {
            auto lk = operand_kind(e.lhs, env, diags);
            auto rk = operand_kind(e.rhs, env, diags);
            if (!lk || !rk) return;
            const std::string where = print(e);
            if (numeric(*lk) && numeric(*rk)) return;  // integers widen to reals
            if (*lk == Kind::string && *rk == Kind::string) {
                if (!equality_op(e.op)) {
                    diags.push_back({where, "strings support only == and !="});
                }
                return;
            }
            if (*lk == Kind::boolean && *rk == Kind::boolean) {
                if (!equality_op(e.op)) {
                    diags.push_back({where, "booleans support only == and != in comparisons"});
                }
                return;
            }
            diags.push_back({where, std::string("kind mismatch: ") + kind_name(*lk) + " " +
                                        compare_op_text(e.op) + " " + kind_name(*rk)});
            return;
        }
        default:
            for (auto& c : e.children) check_expr(c, env, diags);
            return;
    }
}

}  // namespace

std::vector<TypeDiagnostic> typecheck(Expr& expr, const TypeEnv& env) {
    std::vector<TypeDiagnostic> diags;
    check_expr(expr, env, diags);
    return diags;
}

std::vector<TypeDiagnostic> typecheck(RuleChain& chain, const TypeEnv& env) {
    std::vector<TypeDiagnostic> diags;
    for (auto& b : chain.branches) check_expr(b.guard, env, diags);
    return diags;
}

// --- evaluation ---------------------------------------------------------------

namespace {

// Thrown when evaluation touches a bound-but-null field; caught at the
// chain/validation boundary where the null policy applies.
struct NullTouched {
    std::string field;
};

const Value& lookup(const std::string& field, const EvalContext& ctx) {
    auto it = ctx.bindings.find(field);
    if (it == ctx.bindings.end()) {
        throw Error("UnboundField", "field '" + field + "' is not bound in the evaluation context");
    }
    if (it->second.is_null()) throw NullTouched{field};
    return it->second;
}

Value operand_value(const Operand& o, const EvalContext& ctx) {
    if (o.type == Operand::Type::literal) return o.literal;
    return lookup(o.field, ctx);
}

bool compare_values(const Value& l, CompareOp op, const Value& r, const Expr& e) {
    if (l.is_number() && r.is_number()) {
        // Exact comparison is intended: values come from parsed literals and
        // extracted fields, never from arithmetic.
        const double a = l.as_number();
        const double b = r.as_number();
        switch (op) {
            case CompareOp::gt: return a > b;
            case CompareOp::ge: return a >= b;
            case CompareOp::lt: return a < b;
            case CompareOp::le: return a <= b;
            case CompareOp::eq: return a == b;
            case CompareOp::ne: return a != b;
        }
    }
    if (l.is_string() && r.is_string()) {
        if (op == CompareOp::eq) return l.as_string() == r.as_string();
        if (op == CompareOp::ne) return l.as_string() != r.as_string();
    }
    if (l.is_bool() && r.is_bool()) {
        if (op == CompareOp::eq) return l.as_bool() == r.as_bool();
        if (op == CompareOp::ne) return l.as_bool() != r.as_bool();
    }
    throw Error("TypecheckViolation",
                "comparison evaluated on incompatible kinds: " + print(e));
}

bool eval_expr(const Expr& e, const EvalContext& ctx) {
    switch (e.node) {
        case Expr::Node::field_ref: {
            const Value& v = lookup(e.field, ctx);
            if (!v.is_bool()) {
                throw Error("TypecheckViolation",
                            "bare predicate field '" + e.field + "' is not boolean");
            }
            return v.as_bool();
        }
        case Expr::Node::compare:
            return compare_values(operand_value(e.lhs, ctx), e.op, operand_value(e.rhs, ctx), e);
        case Expr::Node::neg:
            return !eval_expr(e.children.front(), ctx);
        case Expr::Node::conj:
            for (const auto& c : e.children) {
                if (!eval_expr(c, ctx)) return false;  // short-circuit
            }
            return true;
        case Expr::Node::disj:
            for (const auto& c : e.children) {
                if (eval_expr(c, ctx)) return true;
            }
            return false;
    }
    throw Error("Internal", "unhandled expression node");
}

}  // namespace

Verdict evaluate_chain(const RuleChain& chain, const EvalContext& ctx) {
    for (const auto& branch : chain.branches) {
        try {
            if (eval_expr(branch.guard, ctx)) return branch.verdict;
        } catch (const NullTouched& n) {
            // Fail-safe: a decision guard that reads a missing value always
            // escalates, regardless of the configured validation policy.
            return Verdict{"HUMAN_REVIEW", "missing field " + n.field};
        }
    }
    return chain.default_verdict;
}

ValidationOutcome evaluate_validation(const Expr& expr, const EvalContext& ctx) {
    try {
        if (eval_expr(expr, ctx)) return {ValidationOutcome::Status::pass, ""};
        return {ValidationOutcome::Status::fail, print(expr)};
    } catch (const NullTouched&) {
        return {ValidationOutcome::Status::skipped_null, ""};
    }
}

}  // namespace foundry::dsl
