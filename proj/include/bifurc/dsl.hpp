#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bifurc/cmatrix.hpp"
#include "bifurc/word.hpp"

namespace bifurc {

// Arithmetic expression in one complex variable. Grammar (tightest first):
//   ^ (integer exponent)  >  unary -  >  * /  >  + -
// with parentheses, decimal literals, the imaginary unit token `i` and the
// variable token `l` for lambda. Negative exponents are allowed only on a
// literal or on `l` (Laurent terms).
class Expr {
public:
    enum class Kind : std::uint8_t { Const, Lambda, Neg, Add, Sub, Mul, Div, Pow };

    struct Node {
        Kind kind;
        cplx value;       // Const
        int exponent;     // Pow
        std::int32_t lhs; // child indices into nodes()
        std::int32_t rhs;
    };

    static Expr parse(const std::string& text);

    cplx eval(cplx lambda) const;
    std::string print() const;

    const std::vector<Node>& nodes() const { return nodes_; }

private:
    friend class ExprParser;
    std::vector<Node> nodes_;
    std::int32_t root_ = -1;

    cplx eval_node(std::int32_t idx, cplx lambda) const;
    void print_node(std::int32_t idx, std::string& out) const;
};

// A user-declared holomorphic family: each generator is a d x d array of
// expressions in lambda. Immutable after construction; evaluation is pure.
class RepFamily {
public:
    RepFamily(std::size_t dimension, std::vector<std::string> generator_names,
              std::vector<std::vector<Expr>> generator_entries, std::vector<cplx> poles,
              bool validate_determinant = true);

    std::size_t dimension() const { return dimension_; }
    std::size_t generator_count() const { return names_.size(); }
    const std::vector<std::string>& generator_names() const { return names_; }
    const std::vector<cplx>& poles() const { return poles_; }

    // image of a single generator (or its inverse) at lambda
    CMatrix generator_image(std::size_t index, bool inverse, cplx lambda) const;

    void check_pole_distance(cplx lambda) const;

    // round-trip support: entry expressions printed back to strings
    std::vector<std::vector<std::string>> printed_entries(std::size_t gen) const;

private:
    std::size_t dimension_;
    std::vector<std::string> names_;
    std::vector<std::vector<Expr>> entries_;  // per generator, row-major d x d
    std::vector<cplx> poles_;

    void validate_determinants() const;
};

// family block (or a full config holding one) -> validated RepFamily
RepFamily parse_family(const std::string& json_text);

// Evaluation view: the family itself or its dual rho*(g) = rho(g^{-1})^t.
// Dualizing twice gives back the original evaluator.
class Rep {
public:
    explicit Rep(const RepFamily& family, bool dual = false) : family_(&family), dual_(dual) {}

    const RepFamily& family() const { return *family_; }
    bool is_dual() const { return dual_; }
    std::size_t dimension() const { return family_->dimension(); }

    Rep dual() const { return Rep(*family_, !dual_); }

    CMatrix generator(std::size_t index, bool inverse, cplx lambda) const;

private:
    const RepFamily* family_;
    bool dual_;
};

// All generator images (and inverses) at a fixed lambda, so per-word products
// cost one matrix multiply per letter.
struct GeneratorImages {
    std::vector<CMatrix> pos, neg;

    const CMatrix& letter(std::int32_t signed_index) const {
        return signed_index > 0 ? pos[static_cast<std::size_t>(signed_index) - 1]
                                : neg[static_cast<std::size_t>(-signed_index) - 1];
    }
    std::size_t dim() const { return pos.empty() ? 0 : pos[0].dim(); }
};

GeneratorImages images_at(const Rep& rep, cplx lambda);
GeneratorImages exterior_images(const GeneratorImages& images, std::size_t k);

// first-listed letter leftmost (Left) or rightmost (Right) in the product
enum class ProductOrder { Left, Right };

ScaledProduct word_product(const GeneratorImages& images, const Word& word, ProductOrder order);
ScaledProduct word_product(const Rep& rep, const Word& word, cplx lambda, ProductOrder order);

}  // namespace bifurc
