#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <string>

#include "ultraiso/errors.hpp"

namespace ultra {

using Int = boost::multiprecision::cpp_int;

/// Exact rational, always kept in lowest terms by the backend.
/// Norm values, weights and absolute values are all of this type;
/// nothing in the library ever rounds through floating point.
using Rational = boost::multiprecision::cpp_rational;

inline Int rat_num(const Rational& r) { return numerator(r); }
inline Int rat_den(const Rational& r) { return denominator(r); }

/// Formats as "num" or "num/den" in lowest terms.
inline std::string rat_str(const Rational& r) {
    if (rat_den(r) == 1) return rat_num(r).str();
    return rat_num(r).str() + "/" + rat_den(r).str();
}

/// Parses "num" or "num/den". Throws ParseError on garbage or zero denominator.
inline Rational rat_parse(const std::string& s, const std::string& field = {}) {
    try {
        auto slash = s.find('/');
        if (slash == std::string::npos) return Rational(Int(s));
        Int num(s.substr(0, slash));
        Int den(s.substr(slash + 1));
        if (den == 0) throw ParseError("zero denominator in rational '" + s + "'", field);
        return Rational(num, den);
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception&) {
        throw ParseError("cannot parse rational '" + s + "'", field);
    }
}

/// p^e for e of either sign, exact.
inline Rational rat_prime_power(unsigned p, int e) {
    Int n = 1;
    for (int i = 0; i < (e < 0 ? -e : e); ++i) n *= p;
    return e >= 0 ? Rational(n) : Rational(Int(1), n);
}

} // namespace ultra
