#pragma once

#include <stdexcept>
#include <string>

namespace ultra {

/// Malformed or inconsistent input (bad JSON, invalid descriptor, schema
/// violation). Carries a pointer to the offending field when known.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::string field = {})
        : std::runtime_error(field.empty() ? what : what + " (at " + field + ")"),
          field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// Precondition violation on an otherwise well-formed request
/// (inverting zero, translating by a vector that is too large, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A p-adic result fell outside the configured valuation window.
/// The caller must widen the window; values are never clamped.
class ValuationOverflow : public std::range_error {
public:
    ValuationOverflow(int valuation, int vmin, int vmax)
        : std::range_error("valuation " + std::to_string(valuation) +
                           " outside window [" + std::to_string(vmin) + ", " +
                           std::to_string(vmax) + "]"),
          valuation_(valuation) {}
    int valuation() const { return valuation_; }

private:
    int valuation_;
};

/// An enumeration would exceed its configured candidate cap.
class CapExceeded : public std::runtime_error {
public:
    CapExceeded(std::string candidates, unsigned long long cap)
        : std::runtime_error("candidate count " + candidates + " exceeds cap " +
                             std::to_string(cap)),
          candidates_(std::move(candidates)) {}
    /// Decimal string: counts routinely exceed 64 bits.
    const std::string& candidates() const { return candidates_; }

private:
    std::string candidates_;
};

/// A tree descends deeper than its declared depth bound.
class DepthExhausted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace ultra
