#include "bifurc/dsl.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "bifurc/errors.hpp"
#include "bifurc/rng.hpp"

namespace bifurc {

namespace {

bool is_constant_node(const std::vector<Expr::Node>& nodes, std::int32_t idx) {
    return nodes[static_cast<std::size_t>(idx)].kind == Expr::Kind::Const;
}

bool is_lambda_node(const std::vector<Expr::Node>& nodes, std::int32_t idx) {
    return nodes[static_cast<std::size_t>(idx)].kind == Expr::Kind::Lambda;
}

}  // namespace

class ExprParser {
public:
    explicit ExprParser(const std::string& text) : text_(text) {}

    Expr run() {
        Expr e;
        e.root_ = parse_expr(e.nodes_);
        skip_ws();
        if (pos_ != text_.size())
            throw SyntaxError("unexpected trailing input '" + std::string(1, text_[pos_]) + "'",
                              pos_);
        return e;
    }

private:
    const std::string& text_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool peek(char c) {
        skip_ws();
        return pos_ < text_.size() && text_[pos_] == c;
    }

    bool accept(char c) {
        if (peek(c)) {
            ++pos_;
            return true;
        }
        return false;
    }

    std::int32_t add(std::vector<Expr::Node>& nodes, Expr::Node node) {
        nodes.push_back(node);
        return static_cast<std::int32_t>(nodes.size()) - 1;
    }

    std::int32_t parse_expr(std::vector<Expr::Node>& nodes) {
        std::int32_t lhs = parse_term(nodes);
        while (true) {
            if (accept('+')) {
                std::int32_t rhs = parse_term(nodes);
                lhs = add(nodes, {Expr::Kind::Add, {}, 0, lhs, rhs});
            } else if (accept('-')) {
                std::int32_t rhs = parse_term(nodes);
                lhs = add(nodes, {Expr::Kind::Sub, {}, 0, lhs, rhs});
            } else {
                return lhs;
            }
        }
    }

    std::int32_t parse_term(std::vector<Expr::Node>& nodes) {
        std::int32_t lhs = parse_unary(nodes);
        while (true) {
            if (accept('*')) {
                std::int32_t rhs = parse_unary(nodes);
                lhs = add(nodes, {Expr::Kind::Mul, {}, 0, lhs, rhs});
            } else if (accept('/')) {
                std::int32_t rhs = parse_unary(nodes);
                lhs = add(nodes, {Expr::Kind::Div, {}, 0, lhs, rhs});
            } else {
                return lhs;
            }
        }
    }

    std::int32_t parse_unary(std::vector<Expr::Node>& nodes) {
        if (accept('-')) {
            std::int32_t child = parse_unary(nodes);
            return add(nodes, {Expr::Kind::Neg, {}, 0, child, -1});
        }
        return parse_power(nodes);
    }

    std::int32_t parse_power(std::vector<Expr::Node>& nodes) {
        std::int32_t base = parse_atom(nodes);
        if (!accept('^')) return base;
        skip_ws();
        std::size_t exp_pos = pos_;
        bool negative = accept('-');
        skip_ws();
        if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
            throw SyntaxError("expected integer exponent after '^'", pos_);
        long exponent = 0;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            exponent = exponent * 10 + (text_[pos_] - '0');
            if (exponent > 1000) throw SyntaxError("exponent too large", exp_pos);
            ++pos_;
        }
        if (negative) {
            bool laurent_ok = is_lambda_node(nodes, base) ||
                              (is_constant_node(nodes, base) &&
                               std::abs(nodes[static_cast<std::size_t>(base)].value) > 0.0);
            if (!laurent_ok)
                throw SyntaxError("negative exponent only allowed on a constant or on l", exp_pos);
            exponent = -exponent;
        }
        return add(nodes, {Expr::Kind::Pow, {}, static_cast<int>(exponent), base, -1});
    }

    std::int32_t parse_atom(std::vector<Expr::Node>& nodes) {
        skip_ws();
        if (pos_ >= text_.size()) throw SyntaxError("unexpected end of expression", pos_);
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            std::int32_t inner = parse_expr(nodes);
            if (!accept(')')) throw SyntaxError("expected ')'", pos_);
            return inner;
        }
        if (c == 'i') {
            ++pos_;
            return add(nodes, {Expr::Kind::Const, cplx(0.0, 1.0), 0, -1, -1});
        }
        if (c == 'l') {
            ++pos_;
            return add(nodes, {Expr::Kind::Lambda, {}, 0, -1, -1});
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number(nodes);
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   std::isalnum(static_cast<unsigned char>(text_[pos_])))
                ++pos_;
            throw Error(ErrorKind::UnknownSymbol, "unknown symbol '" +
                                                      text_.substr(start, pos_ - start) +
                                                      "' at position " + std::to_string(start));
        }
        throw SyntaxError("unexpected character '" + std::string(1, c) + "'", pos_);
    }

    std::int32_t parse_number(std::vector<Expr::Node>& nodes) {
        std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                ++pos_;
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t mark = pos_;
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                pos_ = mark;  // the 'e' was not an exponent
            } else {
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                    ++pos_;
            }
        }
        if (pos_ == start || (pos_ == start + 1 && text_[start] == '.'))
            throw SyntaxError("malformed number", start);
        double value = 0.0;
        try {
            value = std::stod(text_.substr(start, pos_ - start));
        } catch (const std::exception&) {
            throw SyntaxError("malformed number", start);
        }
        return add(nodes, {Expr::Kind::Const, cplx(value, 0.0), 0, -1, -1});
    }
};

Expr Expr::parse(const std::string& text) { return ExprParser(text).run(); }

cplx Expr::eval_node(std::int32_t idx, cplx lambda) const {
    const Node& node = nodes_[static_cast<std::size_t>(idx)];
    switch (node.kind) {
        case Kind::Const: return node.value;
        case Kind::Lambda: return lambda;
        case Kind::Neg: return -eval_node(node.lhs, lambda);
        case Kind::Add: return eval_node(node.lhs, lambda) + eval_node(node.rhs, lambda);
        case Kind::Sub: return eval_node(node.lhs, lambda) - eval_node(node.rhs, lambda);
        case Kind::Mul: return eval_node(node.lhs, lambda) * eval_node(node.rhs, lambda);
        case Kind::Div: {
            cplx denom = eval_node(node.rhs, lambda);
            if (std::abs(denom) == 0.0)
                throw Error(ErrorKind::Pole, "division by zero while evaluating expression");
            return eval_node(node.lhs, lambda) / denom;
        }
        case Kind::Pow: {
            cplx base = eval_node(node.lhs, lambda);
            int e = node.exponent;
            if (e < 0 && std::abs(base) == 0.0)
                throw Error(ErrorKind::Pole, "negative power of zero while evaluating expression");
            cplx acc(1.0, 0.0);
            int mag = std::abs(e);
            for (int i = 0; i < mag; ++i) acc *= base;
            return e < 0 ? cplx(1.0, 0.0) / acc : acc;
        }
    }
    return cplx(0.0, 0.0);
}

cplx Expr::eval(cplx lambda) const {
    cplx v = eval_node(root_, lambda);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw Error(ErrorKind::Pole, "expression evaluated to a non-finite value");
    return v;
}

void Expr::print_node(std::int32_t idx, std::string& out) const {
    const Node& node = nodes_[static_cast<std::size_t>(idx)];
    std::ostringstream num;
    switch (node.kind) {
        case Kind::Const:
            if (node.value == cplx(0.0, 1.0)) {
                out += "i";
            } else {
                num.precision(17);
                num << node.value.real();
                out += num.str();
            }
            return;
        case Kind::Lambda: out += "l"; return;
        case Kind::Neg:
            out += "(-";
            print_node(node.lhs, out);
            out += ")";
            return;
        case Kind::Add:
        case Kind::Sub:
        case Kind::Mul:
        case Kind::Div: {
            char op = node.kind == Kind::Add   ? '+'
                      : node.kind == Kind::Sub ? '-'
                      : node.kind == Kind::Mul ? '*'
                                               : '/';
            out += "(";
            print_node(node.lhs, out);
            out += op;
            print_node(node.rhs, out);
            out += ")";
            return;
        }
        case Kind::Pow:
            out += "(";
            print_node(node.lhs, out);
            out += "^";
            out += std::to_string(node.exponent);
            out += ")";
            return;
    }
}

std::string Expr::print() const {
    std::string out;
    print_node(root_, out);
    return out;
}

RepFamily::RepFamily(std::size_t dimension, std::vector<std::string> generator_names,
                     std::vector<std::vector<Expr>> generator_entries, std::vector<cplx> poles,
                     bool validate_determinant)
    : dimension_(dimension),
      names_(std::move(generator_names)),
      entries_(std::move(generator_entries)),
      poles_(std::move(poles)) {
    if (dimension_ < 2 || dimension_ > 8)
        throw Error(ErrorKind::Dimension,
                    "dimension " + std::to_string(dimension_) + " outside supported range 2..8");
    if (names_.empty()) throw Error(ErrorKind::Config, "family needs at least one generator");
    if (names_.size() != entries_.size())
        throw Error(ErrorKind::Config, "generator name/entry count mismatch");
    for (const std::string& name : names_) {
        if (name.empty() ||
            !std::all_of(name.begin(), name.end(), [](unsigned char c) {
                return std::islower(c) || std::isdigit(c);
            }) ||
            !std::islower(static_cast<unsigned char>(name[0])))
            throw Error(ErrorKind::Config,
                        "generator name '" + name + "' must be lowercase (uppercase = inverse)");
    }
    for (std::size_t g = 0; g < entries_.size(); ++g)
        if (entries_[g].size() != dimension_ * dimension_)
            throw Error(ErrorKind::Dimension,
                        "generator '" + names_[g] + "' is not a " + std::to_string(dimension_) +
                            "x" + std::to_string(dimension_) + " matrix");
    if (validate_determinant) validate_determinants();
}

void RepFamily::validate_determinants() const {
    // det(rho_lambda(g)) is holomorphic; if it is not identically 1 it fails on
    // an open set, so 32 sample points catch any violation in practice.
    SplitMix64 rng = derive_stream(0xB1F0C1ABull, {stream::kValidation});
    std::size_t checked = 0;
    std::size_t attempts = 0;
    while (checked < 32 && attempts < 4096) {
        ++attempts;
        double radius = 0.6 + 0.8 * rng.next_double();
        double angle = 2.0 * 3.14159265358979323846 * rng.next_double();
        cplx lambda(radius * std::cos(angle), radius * std::sin(angle));
        bool near_pole = false;
        for (cplx p : poles_)
            if (std::abs(lambda - p) < 1e-6) near_pole = true;
        if (near_pole) continue;
        ++checked;
        for (std::size_t g = 0; g < names_.size(); ++g) {
            CMatrix m = generator_image(g, false, lambda);
            cplx dt = m.det();
            if (std::abs(dt - cplx(1.0, 0.0)) > 1e-8) {
                std::ostringstream msg;
                msg << "generator '" << names_[g] << "' has |det - 1| = "
                    << std::abs(dt - cplx(1.0, 0.0)) << " at lambda = (" << lambda.real() << ", "
                    << lambda.imag() << ")";
                throw Error(ErrorKind::Determinant, msg.str());
            }
        }
    }
    if (checked < 32)
        throw Error(ErrorKind::Config, "could not find 32 sample points away from declared poles");
}

void RepFamily::check_pole_distance(cplx lambda) const {
    for (cplx p : poles_)
        if (std::abs(lambda - p) < 1e-12)
            throw Error(ErrorKind::Pole, "lambda within 1e-12 of a declared pole");
}

CMatrix RepFamily::generator_image(std::size_t index, bool inverse, cplx lambda) const {
    if (index >= names_.size())
        throw Error(ErrorKind::UnknownSymbol, "generator index out of range");
    check_pole_distance(lambda);
    CMatrix m(dimension_);
    const std::vector<Expr>& entries = entries_[index];
    for (std::size_t i = 0; i < dimension_; ++i)
        for (std::size_t j = 0; j < dimension_; ++j)
            m(i, j) = entries[i * dimension_ + j].eval(lambda);
    if (!inverse) return m;
    return m.inverse(1e-10);
}

std::vector<std::vector<std::string>> RepFamily::printed_entries(std::size_t gen) const {
    std::vector<std::vector<std::string>> rows(dimension_);
    for (std::size_t i = 0; i < dimension_; ++i) {
        rows[i].resize(dimension_);
        for (std::size_t j = 0; j < dimension_; ++j)
            rows[i][j] = entries_[gen][i * dimension_ + j].print();
    }
    return rows;
}

RepFamily parse_family(const std::string& json_text) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SyntaxError(std::string("invalid JSON: ") + e.what(), e.byte);
    }
    const nlohmann::json& fam = root.contains("family") ? root.at("family") : root;
    if (!fam.contains("dimension") || !fam.contains("generators"))
        throw Error(ErrorKind::Config, "family block needs 'dimension' and 'generators'");

    auto dimension = fam.at("dimension").get<std::size_t>();
    std::vector<std::string> names;
    std::vector<std::vector<Expr>> entries;
    for (auto it = fam.at("generators").begin(); it != fam.at("generators").end(); ++it) {
        names.push_back(it.key());
        const nlohmann::json& rows = it.value();
        if (!rows.is_array() || rows.size() != dimension)
            throw Error(ErrorKind::Dimension,
                        "generator '" + it.key() + "' must have " + std::to_string(dimension) +
                            " rows");
        std::vector<Expr> mat;
        mat.reserve(dimension * dimension);
        for (const auto& row : rows) {
            if (!row.is_array() || row.size() != dimension)
                throw Error(ErrorKind::Dimension,
                            "generator '" + it.key() + "' has a row of wrong length");
            for (const auto& cell : row) {
                if (!cell.is_string())
                    throw Error(ErrorKind::Config, "matrix entries must be expression strings");
                mat.push_back(Expr::parse(cell.get<std::string>()));
            }
        }
        entries.push_back(std::move(mat));
    }

    std::vector<cplx> poles;
    if (fam.contains("poles")) {
        for (const auto& p : fam.at("poles")) {
            if (!p.is_array() || p.size() != 2)
                throw Error(ErrorKind::Config, "poles must be [re, im] pairs");
            poles.emplace_back(p[0].get<double>(), p[1].get<double>());
        }
    }

    return RepFamily(dimension, std::move(names), std::move(entries), std::move(poles));
}

CMatrix Rep::generator(std::size_t index, bool inverse, cplx lambda) const {
    if (!dual_) return family_->generator_image(index, inverse, lambda);
    return family_->generator_image(index, !inverse, lambda).transpose();
}

GeneratorImages images_at(const Rep& rep, cplx lambda) {
    GeneratorImages images;
    std::size_t k = rep.family().generator_count();
    images.pos.reserve(k);
    images.neg.reserve(k);
    for (std::size_t g = 0; g < k; ++g) {
        images.pos.push_back(rep.generator(g, false, lambda));
        images.neg.push_back(rep.generator(g, true, lambda));
    }
    return images;
}

GeneratorImages exterior_images(const GeneratorImages& images, std::size_t k) {
    GeneratorImages out;
    out.pos.reserve(images.pos.size());
    out.neg.reserve(images.neg.size());
    for (const CMatrix& m : images.pos) out.pos.push_back(exterior_power(m, k));
    for (const CMatrix& m : images.neg) out.neg.push_back(exterior_power(m, k));
    return out;
}

ScaledProduct word_product(const GeneratorImages& images, const Word& word, ProductOrder order) {
    ScaledProduct p = ScaledProduct::identity(images.dim());
    std::size_t since_renorm = 0;
    double checked_scale = 0.0;
    for (std::int32_t letter : word.letters) {
        const CMatrix& factor = images.letter(letter);
        if (order == ProductOrder::Right)
            p.multiply_left(factor);
        else
            p.multiply_right(factor);
        // check the determinant while it is still resolvable: either every 64
        // factors or whenever the scale has grown enough to threaten that
        if (++since_renorm == 64 || std::abs(p.log_scale - checked_scale) >= 8.0) {
            p.renormalize_unimodular();
            since_renorm = 0;
            checked_scale = p.log_scale;
        }
    }
    p.renormalize_unimodular();
    return p;
}

ScaledProduct word_product(const Rep& rep, const Word& word, cplx lambda, ProductOrder order) {
    return word_product(images_at(rep, lambda), word, order);
}

}  // namespace bifurc
