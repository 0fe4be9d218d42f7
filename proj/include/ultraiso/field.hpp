#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ultraiso/prng.hpp"
#include "ultraiso/rational.hpp"

namespace ultra {

enum class FieldKind { Finite, Padic };

/// Which field we are working over.
///
/// Finite fields carry the trivial valuation (|x| = 1 for x != 0) and are
/// supported for q prime or q = 4. Padic fields are truncated: elements hold
/// `precision` significant base-p digits and a valuation restricted to
/// [vmin, vmax]; leaving the window is a hard error, never a silent clamp.
struct FieldDesc {
    FieldKind kind = FieldKind::Finite;
    std::uint32_t q = 2;           // Finite
    std::uint32_t p = 2;           // Padic
    std::uint32_t precision = 1;   // Padic: significant digits
    int vmin = 0;
    int vmax = 0;
    bool operator==(const FieldDesc&) const = default;
};

/// One scalar. For finite fields this is an index in [0, q); F_4 uses the
/// labels 0, 1, x, x^2 for indices 0..3. For p-adic fields a nonzero value
/// is p^valuation * (digits[0] + digits[1] p + ...) with digits[0] != 0 and
/// exactly `precision` digits stored; equality means equal to that precision.
struct FieldElement {
    bool padic = false;
    bool zero = false;                 // p-adic exact zero
    std::uint32_t index = 0;           // finite index
    int valuation = 0;                 // p-adic
    std::vector<std::uint32_t> digits; // p-adic unit digits, least significant first

    bool operator==(const FieldElement&) const = default;
};

/// Deterministic total order on canonical forms: zero first, then by
/// absolute value ascending, ties broken digit-lexicographically.
int compare_elements(const FieldElement& a, const FieldElement& b);

class Field {
public:
    static Field finite(std::uint32_t q);
    static Field padic(std::uint32_t p, std::uint32_t precision, int vmin, int vmax);
    explicit Field(const FieldDesc& desc);

    const FieldDesc& desc() const { return desc_; }
    FieldKind kind() const { return desc_.kind; }
    bool is_finite() const { return desc_.kind == FieldKind::Finite; }
    bool trivial_valuation() const { return is_finite(); }
    std::uint32_t characteristic() const;

    FieldElement zero() const;
    FieldElement one() const;
    bool is_zero(const FieldElement& a) const { return is_finite() ? a.index == 0 : a.zero; }
    bool is_one(const FieldElement& a) const;

    FieldElement from_integer(const Int& k) const;
    FieldElement from_rational(const Int& num, const Int& den) const;

    /// digits_lost, when given, receives how many of the `precision`
    /// significant digits were destroyed by cancellation (0 for exact).
    FieldElement add(const FieldElement& a, const FieldElement& b,
                     unsigned* digits_lost = nullptr) const;
    FieldElement neg(const FieldElement& a) const;
    FieldElement sub(const FieldElement& a, const FieldElement& b,
                     unsigned* digits_lost = nullptr) const;
    FieldElement mul(const FieldElement& a, const FieldElement& b) const;
    FieldElement inv(const FieldElement& a) const;

    /// |a|: 0 iff a = 0; 1 on finite fields; p^-valuation on p-adic fields.
    Rational abs_value(const FieldElement& a) const;

    /// p^e as a field element (p-adic only); e must lie in the window.
    FieldElement p_power(int e) const;

    /// Digit of the expansion at absolute position pos (0 when below the
    /// valuation or beyond the stored precision).
    std::uint32_t digit_at(const FieldElement& a, int pos) const;

    /// All q elements, canonical order. Finite fields only.
    std::vector<FieldElement> all_elements() const;

    /// Uniform over all elements (finite) or uniform valuation and digits
    /// with a small chance of exact zero (p-adic).
    FieldElement random_element(Prng& rng) const;
    /// Uniform with |a| = 1.
    FieldElement random_unit(Prng& rng) const;

    void check_canonical(const FieldElement& a) const;
    std::string format(const FieldElement& a) const;

private:
    FieldDesc desc_;

    FieldElement make_padic(int valuation, const Int& unit, unsigned* digits_lost) const;
    Int unit_value(const FieldElement& a) const;
    Int precision_modulus() const;
    void check_window(int v) const;
};

} // namespace ultra
