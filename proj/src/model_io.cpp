#include "smf/model_io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace smf {

namespace {

// ---------------------------------------------------------------------------
// Expression tokenizer / recursive-descent parser
// ---------------------------------------------------------------------------

enum class Tok { Number, Imag, Var, RowTok, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End };

struct Token {
    Tok kind;
    long double number = 0.0L;
    int var_index = 0;
    std::string ident;
    int col = 0;
};

class Lexer {
  public:
    Lexer(std::string_view text, int line) : text_(text), line_(line) {}

    Token next() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        int col = static_cast<int>(pos_) + col_offset_ + 1;
        if (pos_ >= text_.size())
            return {Tok::End, 0.0L, 0, {}, col};
        char c = text_[pos_];
        switch (c) {
        case '+': ++pos_; return {Tok::Plus, 0.0L, 0, {}, col};
        case '-': ++pos_; return {Tok::Minus, 0.0L, 0, {}, col};
        case '*': ++pos_; return {Tok::Star, 0.0L, 0, {}, col};
        case '/': ++pos_; return {Tok::Slash, 0.0L, 0, {}, col};
        case '^': ++pos_; return {Tok::Caret, 0.0L, 0, {}, col};
        case '(': ++pos_; return {Tok::LParen, 0.0L, 0, {}, col};
        case ')': ++pos_; return {Tok::RParen, 0.0L, 0, {}, col};
        case ',': ++pos_; return {Tok::Comma, 0.0L, 0, {}, col};
        default: break;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = text_.data() + pos_;
            char* end = nullptr;
            long double v = std::strtold(begin, &end);
            if (end == begin)
                throw ParseError(line_, col, "malformed number");
            pos_ += static_cast<size_t>(end - begin);
            return {Tok::Number, v, 0, {}, col};
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                ++pos_;
            std::string word(text_.substr(start, pos_ - start));
            if (word == "i")
                return {Tok::Imag, 0.0L, 0, {}, col};
            if (word == "n")
                return {Tok::RowTok, 0.0L, 0, {}, col};
            if (word.size() >= 2 && word[0] == 'x' &&
                std::all_of(word.begin() + 1, word.end(), [](char d) { return std::isdigit(static_cast<unsigned char>(d)); })) {
                int idx = std::atoi(word.c_str() + 1);
                if (idx < 1)
                    throw ParseError(line_, col, "variable index must be >= 1");
                return {Tok::Var, 0.0L, idx, {}, col};
            }
            return {Tok::Ident, 0.0L, 0, std::move(word), col};
        }
        throw ParseError(line_, col, std::string("unexpected character '") + c + "'");
    }

    void set_col_offset(int off) { col_offset_ = off; }

  private:
    std::string_view text_;
    size_t pos_ = 0;
    int line_;
    int col_offset_ = 0;
};

class ExprParser {
  public:
    ExprParser(std::string_view text, int line, int col_offset) : lex_(text, line), line_(line) {
        lex_.set_col_offset(col_offset);
        advance();
    }

    ScalarExpr parse() {
        ScalarExpr e = expr();
        expect(Tok::End, "trailing input after expression");
        return e;
    }

  private:
    void advance() { cur_ = lex_.next(); }

    void expect(Tok k, const std::string& msg) {
        if (cur_.kind != k)
            throw ParseError(line_, cur_.col, msg);
        advance();
    }

    ScalarExpr expr() {
        ScalarExpr lhs = term();
        while (cur_.kind == Tok::Plus || cur_.kind == Tok::Minus) {
            ExprKind op = cur_.kind == Tok::Plus ? ExprKind::Add : ExprKind::Sub;
            advance();
            lhs = ScalarExpr::binary(op, std::move(lhs), term());
        }
        return lhs;
    }

    ScalarExpr term() {
        ScalarExpr lhs = unary();
        while (cur_.kind == Tok::Star || cur_.kind == Tok::Slash) {
            ExprKind op = cur_.kind == Tok::Star ? ExprKind::Mul : ExprKind::Div;
            advance();
            lhs = ScalarExpr::binary(op, std::move(lhs), unary());
        }
        return lhs;
    }

    ScalarExpr unary() {
        if (cur_.kind == Tok::Plus) {
            advance();
            return unary();
        }
        if (cur_.kind == Tok::Minus) {
            advance();
            ScalarExpr inner = unary();
            if (inner.kind() == ExprKind::Constant)
                return ScalarExpr::constant(-inner.constant_value());
            return ScalarExpr::constant(-1.0) * std::move(inner);
        }
        return power();
    }

    ScalarExpr power() {
        ScalarExpr base = atom();
        if (cur_.kind != Tok::Caret)
            return base;
        int caret_col = cur_.col;
        advance();
        bool parens = cur_.kind == Tok::LParen;
        if (parens)
            advance();
        bool neg = false;
        if (cur_.kind == Tok::Minus) {
            neg = true;
            advance();
        }
        ScalarExpr out;
        if (cur_.kind == Tok::RowTok) {
            if (neg)
                throw ParseError(line_, cur_.col, "row-token exponent cannot be negated");
            advance();
            out = ScalarExpr::pow(std::move(base), 0, true);
        } else if (cur_.kind == Tok::Number) {
            long double v = cur_.number;
            if (v != static_cast<long double>(static_cast<long long>(v)))
                throw ParseError(line_, cur_.col, "exponent must be an integer");
            advance();
            long long e = static_cast<long long>(v);
            out = ScalarExpr::pow(std::move(base), static_cast<int>(neg ? -e : e));
        } else {
            throw ParseError(line_, caret_col, "exponent must be an integer or 'n'");
        }
        if (parens)
            expect(Tok::RParen, "expected ')' after exponent");
        return out;
    }

    ScalarExpr atom() {
        switch (cur_.kind) {
        case Tok::Number: {
            ScalarExpr e = ScalarExpr::constant(cxld(cur_.number));
            advance();
            return e;
        }
        case Tok::Imag: {
            advance();
            return ScalarExpr::constant(cxld(0.0L, 1.0L));
        }
        case Tok::Var: {
            ScalarExpr e = ScalarExpr::variable(cur_.var_index);
            advance();
            return e;
        }
        case Tok::RowTok:
            advance();
            return ScalarExpr::row_index();
        case Tok::LParen: {
            advance();
            ScalarExpr e = expr();
            expect(Tok::RParen, "expected ')'");
            return e;
        }
        case Tok::Ident: {
            std::string name = cur_.ident;
            int col = cur_.col;
            BuiltinFn fn;
            if (name == "chebP")
                fn = BuiltinFn::ChebP;
            else if (name == "tanQ")
                fn = BuiltinFn::TanQ;
            else if (name == "tanR")
                fn = BuiltinFn::TanR;
            else
                throw ParseError(line_, col, "unknown function '" + name + "'");
            advance();
            expect(Tok::LParen, "expected '(' after '" + name + "'");
            if (cur_.kind != Tok::RowTok)
                throw ParseError(line_, cur_.col, "first argument of " + name + " must be the row token n");
            advance();
            expect(Tok::Comma, "expected ',' in " + name + "(n, ...)");
            ScalarExpr arg = expr();
            expect(Tok::RParen, "expected ')' closing " + name);
            return ScalarExpr::builtin(fn, std::move(arg));
        }
        default:
            throw ParseError(line_, cur_.col, "expected an expression");
        }
    }

    Lexer lex_;
    Token cur_;
    int line_;
};

// ---------------------------------------------------------------------------
// Document parser
// ---------------------------------------------------------------------------

std::string trim(std::string s) {
    size_t a = s.find_first_not_of(" \t\r");
    size_t b = s.find_last_not_of(" \t\r");
    if (a == std::string::npos)
        return {};
    return s.substr(a, b - a + 1);
}

struct Section {
    std::string tag;
    std::string body;
    int line;
    int body_col; // 1-based column where the body starts on the line
};

Transform1d parse_primitive(const std::string& text, int line, int col) {
    Transform1d t;
    std::string s = trim(text);
    if (s == "id") {
        t.kind = TransformKind::Identity;
    } else if (s == "exp") {
        t.kind = TransformKind::Exp;
    } else if (s == "tan_half") {
        t.kind = TransformKind::TanHalf;
    } else if (s == "cos") {
        t.kind = TransformKind::Cos;
    } else if (s == "sin") {
        t.kind = TransformKind::Sin;
    } else if (s.rfind("affine", 0) == 0) {
        size_t open = s.find('(');
        size_t comma = s.find(',', open == std::string::npos ? 0 : open);
        size_t close = s.rfind(')');
        if (open == std::string::npos || comma == std::string::npos || close == std::string::npos || close < comma)
            throw ParseError(line, col, "affine transform needs the form affine(a,b)");
        char* end = nullptr;
        std::string sa = trim(s.substr(open + 1, comma - open - 1));
        std::string sb = trim(s.substr(comma + 1, close - comma - 1));
        double a = std::strtod(sa.c_str(), &end);
        if (end != sa.c_str() + sa.size())
            throw ParseError(line, col, "malformed affine coefficient '" + sa + "'");
        double b = std::strtod(sb.c_str(), &end);
        if (end != sb.c_str() + sb.size())
            throw ParseError(line, col, "malformed affine coefficient '" + sb + "'");
        t.kind = TransformKind::Affine;
        t.affine_a = a;
        t.affine_b = b;
    } else {
        throw ParseError(line, col, "unknown primitive '" + s + "'");
    }
    return t;
}

} // namespace

ScalarExpr parse_expression(std::string_view text) {
    return ExprParser(text, 1, 0).parse();
}

FactorModel parse_model(std::string_view text) {
    std::vector<Section> sections;
    {
        std::string current;
        int line_no = 0;
        std::istringstream is{std::string(text)};
        std::string raw;
        while (std::getline(is, raw)) {
            ++line_no;
            size_t hash = raw.find('#');
            if (hash != std::string::npos)
                raw = raw.substr(0, hash);
            std::string line = trim(raw);
            if (line.empty())
                continue;
            if (line[0] != '[')
                throw ParseError(line_no, 1, "expected a [section] line");
            size_t close = line.find(']');
            if (close == std::string::npos)
                throw ParseError(line_no, 1, "missing ']' in section tag");
            Section s;
            s.tag = line.substr(1, close - 1);
            s.body = trim(line.substr(close + 1));
            s.line = line_no;
            s.body_col = static_cast<int>(raw.find(s.body.empty() ? "]" : s.body)) + 1;
            sections.push_back(std::move(s));
        }
    }

    FactorModel model;
    bool have_dims = false, have_domain = false, have_a = false, have_scaling = false;
    std::map<int, Transform1d> transforms;
    std::map<int, std::pair<ScalarExpr, int>> explicit_rows; // row -> (expr, line)
    std::optional<std::pair<ScalarExpr, int>> template_row;

    for (const Section& s : sections) {
        if (s.tag == "dims") {
            if (have_dims)
                throw ParseError(s.line, 1, "duplicate [dims] section");
            have_dims = true;
            std::istringstream bs(s.body);
            std::string kv;
            std::map<std::string, int> vals;
            while (bs >> kv) {
                size_t eq = kv.find('=');
                if (eq == std::string::npos)
                    throw ParseError(s.line, s.body_col, "expected K=... N=... R=... l=...");
                std::string key = kv.substr(0, eq);
                int v = std::atoi(kv.c_str() + eq + 1);
                if (v < 1)
                    throw ParseError(s.line, s.body_col, "dimension '" + key + "' must be a positive integer");
                vals[key] = v;
            }
            for (const char* key : {"K", "N", "R", "l"})
                if (!vals.count(key))
                    throw ParseError(s.line, s.body_col, std::string("missing dimension '") + key + "'");
            model.K = vals["K"];
            model.N = vals["N"];
            model.R = vals["R"];
            model.l = vals["l"];
        } else if (s.tag == "domain") {
            if (have_domain)
                throw ParseError(s.line, 1, "duplicate [domain] section");
            have_domain = true;
            if (s.body == "real")
                model.domain = Domain::Real;
            else if (s.body == "complex")
                model.domain = Domain::Complex;
            else
                throw ParseError(s.line, s.body_col, "domain must be 'real' or 'complex'");
        } else if (s.tag == "A") {
            if (have_a)
                throw ParseError(s.line, 1, "duplicate [A] section");
            have_a = true;
            if (s.body != "generic")
                throw ParseError(s.line, s.body_col, "only '[A] generic' is supported in model files");
            model.a_spec = GenericDenseA{};
        } else if (s.tag == "transform") {
            size_t eq = s.body.find('=');
            if (eq == std::string::npos || s.body.size() < 2 || s.body[0] != 'f')
                throw ParseError(s.line, s.body_col, "expected 'f<j> = <primitive>'");
            int j = std::atoi(trim(s.body.substr(1, eq - 1)).c_str());
            if (j < 1)
                throw ParseError(s.line, s.body_col, "transform coordinate must be >= 1");
            if (transforms.count(j))
                throw ParseError(s.line, s.body_col, "duplicate transform for coordinate " + std::to_string(j));
            transforms[j] = parse_primitive(s.body.substr(eq + 1), s.line, s.body_col);
        } else if (s.tag == "column") {
            size_t eq = s.body.find('=');
            if (eq == std::string::npos || s.body.size() < 3 || s.body[0] != 'b' || s.body[1] != '_')
                throw ParseError(s.line, s.body_col, "expected 'b_n = <expression>' or 'b_<row> = <expression>'");
            std::string which = trim(s.body.substr(2, eq - 2));
            std::string rhs = s.body.substr(eq + 1);
            int expr_col = s.body_col + static_cast<int>(eq) + 1;
            ScalarExpr e = ExprParser(rhs, s.line, expr_col - 1).parse();
            if (which == "n") {
                if (template_row || !explicit_rows.empty())
                    throw ParseError(s.line, s.body_col, "b_n template cannot be mixed with other column lines");
                template_row = {std::move(e), s.line};
            } else {
                int row = std::atoi(which.c_str());
                if (row < 1)
                    throw ParseError(s.line, s.body_col, "row index must be 'n' or a positive integer");
                if (template_row)
                    throw ParseError(s.line, s.body_col, "explicit rows cannot be mixed with a b_n template");
                if (explicit_rows.count(row))
                    throw ParseError(s.line, s.body_col, "duplicate row b_" + std::to_string(row));
                explicit_rows[row] = {std::move(e), s.line};
            }
        } else if (s.tag == "scaling_invariant") {
            if (have_scaling)
                throw ParseError(s.line, 1, "duplicate [scaling_invariant] section");
            have_scaling = true;
            if (s.body == "true")
                model.scaling = ScalingFlag::DeclaredTrue;
            else if (s.body == "false")
                model.scaling = ScalingFlag::DeclaredFalse;
            else if (s.body == "unknown")
                model.scaling = ScalingFlag::Unknown;
            else
                throw ParseError(s.line, s.body_col, "scaling_invariant must be true, false or unknown");
        } else {
            throw ParseError(s.line, 1, "unknown section [" + s.tag + "]");
        }
    }

    if (!have_dims)
        throw ParseError(1, 1, "missing [dims] section");
    if (!template_row && explicit_rows.empty())
        throw ParseError(1, 1, "missing [column] section");

    Transform t = Transform::identity(model.l);
    for (const auto& [j, prim] : transforms) {
        if (j > model.l)
            throw ParseError(1, 1, "transform coordinate f" + std::to_string(j) + " exceeds l = " + std::to_string(model.l));
        t.coords[static_cast<size_t>(j - 1)] = prim;
    }

    try {
        if (template_row) {
            model.columns = ColumnModel::from_template(template_row->first, std::move(t), model.l, model.N);
        } else {
            std::vector<ScalarExpr> rows;
            rows.reserve(explicit_rows.size());
            for (int r = 1; r <= model.N; ++r) {
                auto it = explicit_rows.find(r);
                if (it == explicit_rows.end())
                    throw std::invalid_argument("missing row b_" + std::to_string(r));
                rows.push_back(it->second.first);
            }
            if (static_cast<int>(explicit_rows.size()) != model.N)
                throw std::invalid_argument("row count does not match N");
            model.columns = ColumnModel::from_rows(std::move(rows), std::move(t), model.l);
        }
    } catch (const std::invalid_argument& e) {
        int line = template_row ? template_row->second
                                : (explicit_rows.empty() ? 1 : explicit_rows.begin()->second.second);
        throw ParseError(line, 1, e.what());
    }

    model.validate();
    return model;
}

FactorModel parse_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open model file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model(buf.str());
}

std::string serialize_model(const FactorModel& model) {
    model.validate();
    if (!std::holds_alternative<GenericDenseA>(model.a_spec))
        throw std::invalid_argument("serialize_model: expression-based A factors are library-only");
    std::ostringstream os;
    os << "[dims] K=" << model.K << " N=" << model.N << " R=" << model.R << " l=" << model.l << "\n";
    os << "[domain] " << (model.domain == Domain::Real ? "real" : "complex") << "\n";
    os << "[A] generic\n";
    const Transform& t = model.column_model().transform();
    for (int j = 1; j <= t.size(); ++j) {
        const Transform1d& c = t.coords[static_cast<size_t>(j - 1)];
        os << "[transform] f" << j << " = " << transform_name(c.kind);
        if (c.kind == TransformKind::Affine)
            os << "(" << c.affine_a.real() << "," << c.affine_b.real() << ")";
        os << "\n";
    }
    const ColumnModel& cm = model.column_model();
    if (cm.has_single_template()) {
        os << "[column] b_n = " << cm.templates().front().to_string() << "\n";
    } else {
        for (int r = 1; r <= cm.rows(); ++r)
            os << "[column] b_" << r << " = " << cm.templates()[static_cast<size_t>(r - 1)].to_string() << "\n";
    }
    os << "[scaling_invariant] ";
    switch (model.scaling) {
    case ScalingFlag::DeclaredTrue: os << "true"; break;
    case ScalingFlag::DeclaredFalse: os << "false"; break;
    case ScalingFlag::Unknown: os << "unknown"; break;
    }
    os << "\n";
    return os.str();
}

void write_model_file(const FactorModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write model file '" + path + "'");
    out << serialize_model(model);
}

} // namespace smf
