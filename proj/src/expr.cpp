#include "ulamcert/expr.hpp"

#include <cctype>
#include <numeric>

namespace ulamcert {

namespace {

struct Parser {
    const std::string& text;
    std::size_t pos = 0;

    explicit Parser(const std::string& t) : text(t) {}

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }
    char peek() {
        skip_ws();
        return pos < text.size() ? text[pos] : '\0';
    }
    bool accept(char c) {
        if (peek() == c) {
            ++pos;
            return true;
        }
        return false;
    }
    void expect(char c, const char* what) {
        if (!accept(c)) throw ParseError(std::string("expected ") + what, pos);
    }

    ExprPtr make(Expr::Kind k, ExprPtr a = nullptr, ExprPtr b = nullptr) {
        auto e = std::make_shared<Expr>();
        e->kind = k;
        e->a = std::move(a);
        e->b = std::move(b);
        return e;
    }

    ExprPtr parse_number() {
        skip_ws();
        const std::size_t start = pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
        if (pos < text.size() && text[pos] == '.') {
            ++pos;
            while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
        }
        if (pos == start) throw ParseError("expected number", pos);
        auto e = std::make_shared<Expr>();
        e->kind = Expr::Kind::constant;
        e->lexeme = text.substr(start, pos - start);
        e->value = interval_from_decimal(e->lexeme);
        return e;
    }

    ExprPtr parse_primary() {
        skip_ws();
        if (pos >= text.size()) throw ParseError("unexpected end of input", pos);
        const char c = text[pos];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (c == '(') {
            ++pos;
            ExprPtr e = parse_sum();
            expect(')', "')'");
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = pos;
            while (pos < text.size() && std::isalpha(static_cast<unsigned char>(text[pos]))) ++pos;
            const std::string id = text.substr(start, pos - start);
            if (id == "x") return make(Expr::Kind::var);
            if (id == "abs") {
                expect('(', "'(' after abs");
                ExprPtr e = parse_sum();
                expect(')', "')'");
                return make(Expr::Kind::abs, std::move(e));
            }
            throw ParseError("unknown identifier '" + id + "'", start);
        }
        throw ParseError("unexpected character", pos);
    }

    // Exponent position: a full atom (so -1, (57/64), 0.5 all work).
    ExprPtr parse_exp_atom() {
        if (accept('-')) return make(Expr::Kind::neg, parse_exp_atom());
        return parse_primary();
    }

    // Unary minus binds looser than '^' (pow > unary minus > mul/div).
    ExprPtr parse_factor() {
        if (accept('-')) return make(Expr::Kind::neg, parse_factor());
        ExprPtr base = parse_primary();
        if (accept('^')) {
            const std::size_t at = pos;
            ExprPtr ex = parse_exp_atom();
            auto r = fold_rational(ex);
            if (!r) throw ParseError("pow exponent must be a rational constant", at);
            auto e = std::make_shared<Expr>();
            e->kind = Expr::Kind::pow;
            e->a = std::move(base);
            e->pow_p = r->first;
            e->pow_q = r->second;
            return e;
        }
        return base;
    }

    ExprPtr parse_term() {
        ExprPtr e = parse_factor();
        for (;;) {
            if (accept('*'))
                e = make(Expr::Kind::mul, std::move(e), parse_factor());
            else if (accept('/'))
                e = make(Expr::Kind::div, std::move(e), parse_factor());
            else
                return e;
        }
    }

    ExprPtr parse_sum() {
        ExprPtr e = parse_term();
        for (;;) {
            if (accept('+'))
                e = make(Expr::Kind::add, std::move(e), parse_term());
            else if (accept('-'))
                e = make(Expr::Kind::sub, std::move(e), parse_term());
            else
                return e;
        }
    }
};

int precedence(const ExprPtr& e) {
    switch (e->kind) {
        case Expr::Kind::add:
        case Expr::Kind::sub: return 1;
        case Expr::Kind::mul:
        case Expr::Kind::div: return 2;
        case Expr::Kind::neg: return 3;
        case Expr::Kind::pow: return 4;
        default: return 5;
    }
}

void render(const ExprPtr& e, std::string& out) {
    auto child = [&](const ExprPtr& c, int min_prec) {
        if (precedence(c) < min_prec) {
            out += '(';
            render(c, out);
            out += ')';
        } else {
            render(c, out);
        }
    };
    switch (e->kind) {
        case Expr::Kind::constant: out += e->lexeme; break;
        case Expr::Kind::var: out += 'x'; break;
        case Expr::Kind::neg:
            out += '-';
            child(e->a, 3);
            break;
        case Expr::Kind::add:
            child(e->a, 1);
            out += " + ";
            child(e->b, 2);
            break;
        case Expr::Kind::sub:
            child(e->a, 1);
            out += " - ";
            child(e->b, 2);
            break;
        case Expr::Kind::mul:
            child(e->a, 2);
            out += '*';
            child(e->b, 3);
            break;
        case Expr::Kind::div:
            child(e->a, 2);
            out += '/';
            child(e->b, 3);
            break;
        case Expr::Kind::abs:
            out += "abs(";
            render(e->a, out);
            out += ')';
            break;
        case Expr::Kind::pow:
            child(e->a, 5);
            out += '^';
            if (e->pow_q == 1 && e->pow_p >= 0) {
                out += std::to_string(e->pow_p);
            } else {
                out += '(';
                out += std::to_string(e->pow_p);
                out += '/';
                out += std::to_string(e->pow_q);
                out += ')';
            }
            break;
    }
}

std::optional<std::pair<long long, long long>> rational_mul(
    std::pair<long long, long long> a, std::pair<long long, long long> b) {
    const __int128 p = __int128(a.first) * b.first;
    const __int128 q = __int128(a.second) * b.second;
    if (p > INT64_MAX / 2 || p < INT64_MIN / 2 || q > INT64_MAX / 2) return std::nullopt;
    return std::make_pair(static_cast<long long>(p), static_cast<long long>(q));
}

std::pair<long long, long long> rational_reduce(std::pair<long long, long long> r) {
    long long g = std::gcd(r.first < 0 ? -r.first : r.first, r.second);
    if (g > 1) {
        r.first /= g;
        r.second /= g;
    }
    return r;
}

} // namespace

ExprPtr parse_expr(const std::string& text) {
    Parser p(text);
    ExprPtr e = p.parse_sum();
    p.skip_ws();
    if (p.pos != text.size()) throw ParseError("trailing input", p.pos);
    return e;
}

std::string to_string(const ExprPtr& e) {
    std::string out;
    render(e, out);
    return out;
}

std::optional<std::pair<long long, long long>> fold_rational(const ExprPtr& e) {
    using R = std::optional<std::pair<long long, long long>>;
    switch (e->kind) {
        case Expr::Kind::constant: {
            // digits -> p / 10^frac_len, then gcd-reduced
            long long p = 0, q = 1;
            bool frac = false;
            int digits = 0;
            for (char c : e->lexeme) {
                if (c == '.') {
                    frac = true;
                    continue;
                }
                if (++digits > 18) return std::nullopt;
                p = p * 10 + (c - '0');
                if (frac) q *= 10;
            }
            return rational_reduce({p, q});
        }
        case Expr::Kind::neg: {
            R r = fold_rational(e->a);
            if (r) r->first = -r->first;
            return r;
        }
        case Expr::Kind::add:
        case Expr::Kind::sub: {
            R ra = fold_rational(e->a), rb = fold_rational(e->b);
            if (!ra || !rb) return std::nullopt;
            auto num1 = rational_mul({ra->first, 1}, {rb->second, 1});
            auto num2 = rational_mul({rb->first, 1}, {ra->second, 1});
            auto den = rational_mul({ra->second, 1}, {rb->second, 1});
            if (!num1 || !num2 || !den) return std::nullopt;
            const long long s = e->kind == Expr::Kind::add ? 1 : -1;
            return rational_reduce({num1->first + s * num2->first, den->first});
        }
        case Expr::Kind::mul: {
            R ra = fold_rational(e->a), rb = fold_rational(e->b);
            if (!ra || !rb) return std::nullopt;
            auto r = rational_mul(*ra, *rb);
            if (!r) return std::nullopt;
            return rational_reduce(*r);
        }
        case Expr::Kind::div: {
            R ra = fold_rational(e->a), rb = fold_rational(e->b);
            if (!ra || !rb || rb->first == 0) return std::nullopt;
            auto r = rational_mul(*ra, {rb->second, rb->first});
            if (!r) return std::nullopt;
            if (r->second < 0) {
                r->first = -r->first;
                r->second = -r->second;
            }
            return rational_reduce(*r);
        }
        default: return std::nullopt;
    }
}

Interval eval_interval(const ExprPtr& e, const Interval& x) {
    switch (e->kind) {
        case Expr::Kind::constant: return e->value;
        case Expr::Kind::var: return x;
        case Expr::Kind::neg: return -eval_interval(e->a, x);
        case Expr::Kind::add: return eval_interval(e->a, x) + eval_interval(e->b, x);
        case Expr::Kind::sub: return eval_interval(e->a, x) - eval_interval(e->b, x);
        case Expr::Kind::mul: return eval_interval(e->a, x) * eval_interval(e->b, x);
        case Expr::Kind::div: return eval_interval(e->a, x) / eval_interval(e->b, x);
        case Expr::Kind::abs: return abs(eval_interval(e->a, x));
        case Expr::Kind::pow: return pow_rational(eval_interval(e->a, x), e->pow_p, e->pow_q);
    }
    throw DomainError("unreachable expression kind");
}

Jet2 eval_jet(const ExprPtr& e, const Interval& x, JetMode mode) {
    switch (e->kind) {
        case Expr::Kind::constant: return Jet2::constant(e->value);
        case Expr::Kind::var: return Jet2::variable(x);
        case Expr::Kind::neg: return -eval_jet(e->a, x, mode);
        case Expr::Kind::add: return eval_jet(e->a, x, mode) + eval_jet(e->b, x, mode);
        case Expr::Kind::sub: return eval_jet(e->a, x, mode) - eval_jet(e->b, x, mode);
        case Expr::Kind::mul: return eval_jet(e->a, x, mode) * eval_jet(e->b, x, mode);
        case Expr::Kind::div: return eval_jet(e->a, x, mode) / eval_jet(e->b, x, mode);
        case Expr::Kind::abs: return abs(eval_jet(e->a, x, mode), mode);
        case Expr::Kind::pow: return pow(eval_jet(e->a, x, mode), e->pow_p, e->pow_q, mode);
    }
    throw DomainError("unreachable expression kind");
}

} // namespace ulamcert
