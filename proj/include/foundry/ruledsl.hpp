#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "foundry/util.hpp"

namespace foundry::dsl {

/*
 * Closed decision-rule language used for workflow logic and validation
 * expressions. Grammar (informal):
 *
 *   chain      ::= "IF" expr "THEN" verdict
 *                  ("ELSE" "IF" expr "THEN" verdict)*
 *                  "ELSE" verdict
 *
 *   expr       ::= and-expr ("OR" and-expr)*
 *   and-expr   ::= unary ("AND" unary)*
 *   unary      ::= "NOT" unary | primary
 *   primary    ::= "(" expr ")" | comparison | boolean-field
 *   comparison ::= field op (literal | field)
 *   op         ::= ">" | ">=" | "<" | "<=" | "==" | "!="
 *   literal    ::= "TRUE" | "FALSE" | integer | real | '"' chars '"'
 *   verdict    ::= uppercase identifier drawn from a declared set
 *   field      ::= identifier (letters, digits, underscore; no leading digit)
 *
 * Precedence: NOT > AND > OR. AND/OR chains flatten to n-ary nodes, so the
 * printer/parser round-trip is structural. Keywords are uppercase and
 * reserved. There is deliberately no arithmetic, no loops and no functions:
 * the language stays closed so generated logic has a verifiable surface.
 */

enum class Kind { boolean, integer, real, string };

const char* kind_name(Kind k);

// Runtime value. Null is a first-class state: extraction steps may yield
// nulls for nullable schema fields, and evaluation policy decides what a
// null touch means.
class Value {
public:
    Value() : v_(std::monostate{}) {}
    explicit Value(bool b) : v_(b) {}
    explicit Value(long long i) : v_(i) {}
    explicit Value(double d) : v_(d) {}
    explicit Value(std::string s) : v_(std::move(s)) {}

    static Value null() { return Value(); }

    bool is_null() const { return std::holds_alternative<std::monostate>(v_); }
    bool is_bool() const { return std::holds_alternative<bool>(v_); }
    bool is_int() const { return std::holds_alternative<long long>(v_); }
    bool is_real() const { return std::holds_alternative<double>(v_); }
    bool is_number() const { return is_int() || is_real(); }
    bool is_string() const { return std::holds_alternative<std::string>(v_); }

    bool as_bool() const { return std::get<bool>(v_); }
    long long as_int() const { return std::get<long long>(v_); }
    double as_number() const {
        return is_int() ? static_cast<double>(std::get<long long>(v_)) : std::get<double>(v_);
    }
    const std::string& as_string() const { return std::get<std::string>(v_); }

    Kind kind() const;
    std::string repr() const;

    bool operator==(const Value& other) const { return v_ == other.v_; }

private:
    std::variant<std::monostate, bool, long long, double, std::string> v_;
};

enum class CompareOp { gt, ge, lt, le, eq, ne };

const char* compare_op_text(CompareOp op);

// Leaf of a comparison: a field reference or a literal.
struct Operand {
    enum class Type { field, literal };
    Type type = Type::field;
    std::string field;
    Value literal;
    // Filled in by typecheck() for field operands.
    std::optional<Kind> resolved_kind;

    static Operand make_field(std::string name) {
        Operand o;
        o.type = Type::field;
        o.field = std::move(name);
        return o;
    }
    static Operand make_literal(Value v) {
        Operand o;
        o.type = Type::literal;
        o.literal = std::move(v);
        return o;
    }
};

struct Expr {
    enum class Node { compare, conj, disj, neg, field_ref };
    Node node = Node::field_ref;

    // compare
    CompareOp op = CompareOp::eq;
    Operand lhs, rhs;

    // conj/disj: >=2 children; neg: exactly 1
    std::vector<Expr> children;

    // field_ref (bare boolean field)
    std::string field;
    std::optional<Kind> resolved_kind;

    static Expr make_field(std::string name);
    static Expr make_compare(Operand lhs, CompareOp op, Operand rhs);
    static Expr make_not(Expr inner);
    // Flatten nested nodes of the same connective (AND/OR are associative).
    static Expr make_conj(std::vector<Expr> children);
    static Expr make_disj(std::vector<Expr> children);
};

bool structurally_equal(const Expr& a, const Expr& b);

struct Verdict {
    std::string code;
    std::string reason;

    bool operator==(const Verdict&) const = default;
};

struct Branch {
    Expr guard;
    Verdict verdict;
};

struct RuleChain {
    std::vector<Branch> branches;  // >=1
    Verdict default_verdict;       // the mandatory explicit ELSE
    // Informational notes from parsing, e.g. verdict alias normalization.
    std::vector<std::string> notes;
};

bool structurally_equal(const RuleChain& a, const RuleChain& b);

// Declared verdict codes plus aliases normalized at parse time. The
// canonical set keeps APPROVE/APPROVED-style spelling drift out of
// compiled artifacts: aliases resolve in exactly one place and every use
// is flagged as a note rather than silently accepted.
class VerdictSet {
public:
    // APPROVED, DENIED, HUMAN_REVIEW, COMPLETED with APPROVE/DENY aliases.
    static VerdictSet standard();

    void add(const std::string& code) { codes_.insert(code); }
    void add_alias(const std::string& alias, const std::string& canonical) {
        aliases_[alias] = canonical;
    }

    bool empty() const { return codes_.empty(); }
    bool contains(const std::string& code) const { return codes_.count(code) > 0; }
    const std::set<std::string>& codes() const { return codes_; }

    // Canonical code for `code`, or nullopt if unknown. Sets *was_alias when
    // an alias was normalized.
    std::optional<std::string> resolve(const std::string& code, bool* was_alias = nullptr) const;

private:
    std::set<std::string> codes_;
    std::map<std::string, std::string> aliases_;
};

enum class NullPolicy { skip_validation, escalate_decision };

struct EvalContext {
    std::map<std::string, Value> bindings;
    NullPolicy null_policy = NullPolicy::escalate_decision;
};

// Typecheck environment: field name -> declared kind.
using TypeEnv = std::map<std::string, Kind>;

struct TypeDiagnostic {
    std::string where;  // offending field or expression fragment
    std::string message;
};

struct ValidationOutcome {
    enum class Status { pass, fail, skipped_null };
    Status status = Status::pass;
    std::string reason;  // violated expression text on fail

    bool passed() const { return status == Status::pass; }
    bool skipped() const { return status == Status::skipped_null; }
};

// --- operations -----------------------------------------------------------

// Throws Error("SyntaxError") with line/column in the message.
Expr parse_expr(const std::string& source);

// Throws Error codes: SyntaxError, UnknownVerdict, MissingElse.
RuleChain parse_rule(const std::string& source, const VerdictSet& verdicts);

// Canonical text. print(parse(s)) parses back to a structurally equal tree.
std::string print(const Expr& expr);
std::string print(const RuleChain& chain);

// Diagnostics are the return value; empty means well-typed. Annotates
// resolved kinds on field leaves.
std::vector<TypeDiagnostic> typecheck(Expr& expr, const TypeEnv& env);
std::vector<TypeDiagnostic> typecheck(RuleChain& chain, const TypeEnv& env);

// First-match evaluation. A null touched while evaluating a guard escalates
// to HUMAN_REVIEW("missing field <name>") — decision logic never silently
// skips a branch. Throws Error("UnboundField") for fields absent from the
// context entirely (distinct from bound-but-null).
Verdict evaluate_chain(const RuleChain& chain, const EvalContext& ctx);

// Pass/fail/skipped-null. A null touched anywhere in the expression skips
// the validation (mirrors presence-guarded checks). Throws
// Error("UnboundField") as above.
ValidationOutcome evaluate_validation(const Expr& expr, const EvalContext& ctx);

}  // namespace foundry::dsl
