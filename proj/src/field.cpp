#include "ultraiso/field.hpp"

#include <algorithm>

#include "ultraiso/errors.hpp"

namespace ultra {

namespace {

bool is_prime(std::uint32_t n) {
    if (n < 2) return false;
    for (std::uint32_t d = 2; d * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}

// F_4 = (Z/2Z)[x] / (x^2 + x + 1), labels 0, 1, x, x^2 as indices 0..3.
constexpr std::uint32_t kF4Add[4][4] = {
    {0, 1, 2, 3},
    {1, 0, 3, 2},
    {2, 3, 0, 1},
    {3, 2, 1, 0},
};
constexpr std::uint32_t kF4Mul[4][4] = {
    {0, 0, 0, 0},
    {0, 1, 2, 3},
    {0, 2, 3, 1},
    {0, 3, 1, 2},
};
constexpr std::uint32_t kF4Inv[4] = {0, 1, 3, 2};

// Extended Euclid; returns gcd and a Bezout coefficient for a.
Int egcd(const Int& a, const Int& b, Int& x) {
    Int old_r = a, r = b;
    Int old_x = 1, xx = 0;
    while (r != 0) {
        Int q = old_r / r;
        Int t = old_r - q * r;
        old_r = r;
        r = t;
        t = old_x - q * xx;
        old_x = xx;
        xx = t;
    }
    x = old_x;
    return old_r;
}

Int mod_inverse(const Int& a, const Int& m) {
    Int x;
    Int g = egcd(((a % m) + m) % m, m, x);
    if (g != 1) throw DomainError("element not invertible modulo " + m.str());
    return ((x % m) + m) % m;
}

} // namespace

int compare_elements(const FieldElement& a, const FieldElement& b) {
    if (!a.padic) {
        if (a.index != b.index) return a.index < b.index ? -1 : 1;
        return 0;
    }
    if (a.zero != b.zero) return a.zero ? -1 : 1;
    if (a.zero) return 0;
    // Larger valuation = smaller absolute value = earlier.
    if (a.valuation != b.valuation) return a.valuation > b.valuation ? -1 : 1;
    if (a.digits != b.digits) return a.digits < b.digits ? -1 : 1;
    return 0;
}

Field Field::finite(std::uint32_t q) {
    FieldDesc d;
    d.kind = FieldKind::Finite;
    d.q = q;
    return Field(d);
}

Field Field::padic(std::uint32_t p, std::uint32_t precision, int vmin, int vmax) {
    FieldDesc d;
    d.kind = FieldKind::Padic;
    d.p = p;
    d.precision = precision;
    d.vmin = vmin;
    d.vmax = vmax;
    return Field(d);
}

Field::Field(const FieldDesc& desc) : desc_(desc) {
    if (desc_.kind == FieldKind::Finite) {
        if (desc_.q != 4 && !is_prime(desc_.q))
            throw ParseError("finite field order must be prime or 4, got " +
                             std::to_string(desc_.q), "field.q");
    } else {
        if (!is_prime(desc_.p))
            throw ParseError("p must be prime, got " + std::to_string(desc_.p), "field.p");
        if (desc_.precision < 1)
            throw ParseError("precision must be >= 1", "field.precision");
        if (desc_.vmin > 0 || desc_.vmax < 0 || desc_.vmin > desc_.vmax)
            throw ParseError("valuation window must satisfy vmin <= 0 <= vmax",
                             "field.window");
    }
}

std::uint32_t Field::characteristic() const {
    if (!is_finite()) return 0;
    return desc_.q == 4 ? 2 : desc_.q;
}

FieldElement Field::zero() const {
    FieldElement e;
    e.padic = !is_finite();
    e.zero = e.padic;
    return e;
}

FieldElement Field::one() const { return from_integer(1); }

bool Field::is_one(const FieldElement& a) const {
    return a == one();
}

Int Field::precision_modulus() const {
    Int m = 1;
    for (std::uint32_t i = 0; i < desc_.precision; ++i) m *= desc_.p;
    return m;
}

void Field::check_window(int v) const {
    if (v < desc_.vmin || v > desc_.vmax)
        throw ValuationOverflow(v, desc_.vmin, desc_.vmax);
}

FieldElement Field::make_padic(int valuation, const Int& unit, unsigned* digits_lost) const {
    const Int modulus = precision_modulus();
    Int u = ((unit % modulus) + modulus) % modulus;
    if (u == 0) {
        // Indistinguishable from zero at this precision.
        if (digits_lost) *digits_lost = desc_.precision;
        return zero();
    }
    unsigned shift = 0;
    while (u % desc_.p == 0) {
        u /= desc_.p;
        ++shift;
    }
    valuation += static_cast<int>(shift);
    check_window(valuation);
    if (digits_lost) *digits_lost = shift;
    FieldElement e;
    e.padic = true;
    e.valuation = valuation;
    e.digits.resize(desc_.precision, 0);
    for (std::uint32_t i = 0; i < desc_.precision && u != 0; ++i) {
        e.digits[i] = static_cast<std::uint32_t>(u % desc_.p);
        u /= desc_.p;
    }
    return e;
}

Int Field::unit_value(const FieldElement& a) const {
    Int u = 0;
    for (std::size_t i = a.digits.size(); i-- > 0;) u = u * desc_.p + a.digits[i];
    return u;
}

FieldElement Field::from_integer(const Int& k) const {
    if (is_finite()) {
        const std::uint32_t c = characteristic();
        Int r = ((k % c) + c) % c;
        FieldElement e;
        e.index = static_cast<std::uint32_t>(r);
        return e;
    }
    if (k == 0) return zero();
    Int m = k;
    int v = 0;
    while (m % desc_.p == 0) {
        m /= desc_.p;
        ++v;
    }
    check_window(v);
    return make_padic(v, m, nullptr);
}

FieldElement Field::from_rational(const Int& num, const Int& den) const {
    if (den == 0) throw DomainError("zero denominator");
    if (is_finite()) {
        FieldElement d = from_integer(den);
        if (is_zero(d)) throw DomainError("denominator vanishes in the field");
        return mul(from_integer(num), inv(d));
    }
    if (num == 0) return zero();
    Int n = num, d = den;
    int v = 0;
    while (n % desc_.p == 0) {
        n /= desc_.p;
        ++v;
    }
    while (d % desc_.p == 0) {
        d /= desc_.p;
        --v;
    }
    check_window(v);
    const Int modulus = precision_modulus();
    Int unit = (((n % modulus) + modulus) % modulus) * mod_inverse(d, modulus) % modulus;
    return make_padic(v, unit, nullptr);
}

FieldElement Field::add(const FieldElement& a, const FieldElement& b,
                        unsigned* digits_lost) const {
    if (digits_lost) *digits_lost = 0;
    if (is_finite()) {
        FieldElement e;
        if (desc_.q == 4) {
            e.index = kF4Add[a.index][b.index];
        } else {
            e.index = (a.index + b.index) % desc_.q;
        }
        return e;
    }
    if (a.zero) return b;
    if (b.zero) return a;
    const FieldElement& lo = a.valuation <= b.valuation ? a : b;
    const FieldElement& hi = a.valuation <= b.valuation ? b : a;
    const unsigned shift = static_cast<unsigned>(hi.valuation - lo.valuation);
    if (shift >= desc_.precision) return lo; // the other term is invisible
    Int scale = 1;
    for (unsigned i = 0; i < shift; ++i) scale *= desc_.p;
    return make_padic(lo.valuation, unit_value(lo) + unit_value(hi) * scale, digits_lost);
}

FieldElement Field::neg(const FieldElement& a) const {
    if (is_finite()) {
        FieldElement e;
        if (desc_.q == 4) {
            e.index = a.index; // characteristic 2
        } else {
            e.index = a.index == 0 ? 0 : desc_.q - a.index;
        }
        return e;
    }
    if (a.zero) return a;
    return make_padic(a.valuation, precision_modulus() - unit_value(a), nullptr);
}

FieldElement Field::sub(const FieldElement& a, const FieldElement& b,
                        unsigned* digits_lost) const {
    return add(a, neg(b), digits_lost);
}

FieldElement Field::mul(const FieldElement& a, const FieldElement& b) const {
    if (is_finite()) {
        FieldElement e;
        if (desc_.q == 4) {
            e.index = kF4Mul[a.index][b.index];
        } else {
            e.index = static_cast<std::uint32_t>(
                (std::uint64_t{a.index} * b.index) % desc_.q);
        }
        return e;
    }
    if (a.zero || b.zero) return zero();
    const int v = a.valuation + b.valuation;
    check_window(v);
    return make_padic(v, unit_value(a) * unit_value(b), nullptr);
}

FieldElement Field::inv(const FieldElement& a) const {
    if (is_zero(a)) throw DomainError("inversion of zero");
    if (is_finite()) {
        FieldElement e;
        if (desc_.q == 4) {
            e.index = kF4Inv[a.index];
        } else {
            e.index = static_cast<std::uint32_t>(
                mod_inverse(Int(a.index), Int(desc_.q)).convert_to<std::uint64_t>());
        }
        return e;
    }
    const int v = -a.valuation;
    check_window(v);
    return make_padic(v, mod_inverse(unit_value(a), precision_modulus()), nullptr);
}

Rational Field::abs_value(const FieldElement& a) const {
    if (is_zero(a)) return Rational(0);
    if (is_finite()) return Rational(1);
    return rat_prime_power(desc_.p, -a.valuation);
}

FieldElement Field::p_power(int e) const {
    if (is_finite()) throw DomainError("p_power on a finite field");
    check_window(e);
    FieldElement el;
    el.padic = true;
    el.valuation = e;
    el.digits.resize(desc_.precision, 0);
    el.digits[0] = 1;
    return el;
}

std::uint32_t Field::digit_at(const FieldElement& a, int pos) const {
    if (!a.padic || a.zero) return 0;
    if (pos < a.valuation) return 0;
    const std::size_t i = static_cast<std::size_t>(pos - a.valuation);
    return i < a.digits.size() ? a.digits[i] : 0;
}

std::vector<FieldElement> Field::all_elements() const {
    if (!is_finite()) throw DomainError("cannot enumerate an infinite field");
    std::vector<FieldElement> out;
    out.reserve(desc_.q);
    for (std::uint32_t i = 0; i < desc_.q; ++i) {
        FieldElement e;
        e.index = i;
        out.push_back(e);
    }
    return out;
}

FieldElement Field::random_element(Prng& rng) const {
    if (is_finite()) {
        FieldElement e;
        e.index = static_cast<std::uint32_t>(rng.below(desc_.q));
        return e;
    }
    if (rng.coin(1, 32)) return zero();
    FieldElement e;
    e.padic = true;
    e.valuation = static_cast<int>(rng.between(desc_.vmin, desc_.vmax));
    e.digits.resize(desc_.precision);
    e.digits[0] = static_cast<std::uint32_t>(1 + rng.below(desc_.p - 1));
    for (std::uint32_t i = 1; i < desc_.precision; ++i)
        e.digits[i] = static_cast<std::uint32_t>(rng.below(desc_.p));
    return e;
}

FieldElement Field::random_unit(Prng& rng) const {
    if (is_finite()) {
        FieldElement e;
        e.index = static_cast<std::uint32_t>(1 + rng.below(desc_.q - 1));
        return e;
    }
    FieldElement e;
    e.padic = true;
    e.valuation = 0;
    e.digits.resize(desc_.precision);
    e.digits[0] = static_cast<std::uint32_t>(1 + rng.below(desc_.p - 1));
    for (std::uint32_t i = 1; i < desc_.precision; ++i)
        e.digits[i] = static_cast<std::uint32_t>(rng.below(desc_.p));
    return e;
}

void Field::check_canonical(const FieldElement& a) const {
    if (is_finite()) {
        if (a.padic || a.index >= desc_.q || !a.digits.empty())
            throw ParseError("element not canonical for F_" + std::to_string(desc_.q));
        return;
    }
    if (!a.padic) throw ParseError("finite element used in a p-adic field");
    if (a.zero) {
        if (!a.digits.empty()) throw ParseError("zero must carry no digits");
        return;
    }
    if (a.digits.size() != desc_.precision)
        throw ParseError("element must carry exactly " +
                         std::to_string(desc_.precision) + " digits");
    if (a.digits[0] == 0) throw ParseError("leading digit of a nonzero element is zero");
    for (auto d : a.digits)
        if (d >= desc_.p) throw ParseError("digit out of range");
    check_window(a.valuation);
}

std::string Field::format(const FieldElement& a) const {
    if (is_finite()) {
        if (desc_.q == 4) {
            static const char* labels[] = {"0", "1", "x", "x^2"};
            return labels[a.index];
        }
        return std::to_string(a.index);
    }
    if (a.zero) return "0";
    std::string s = std::to_string(desc_.p) + "^" + std::to_string(a.valuation) + "*[";
    for (std::size_t i = 0; i < a.digits.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(a.digits[i]);
    }
    return s + "]";
}

} // namespace ultra
