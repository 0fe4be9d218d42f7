#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ultraiso/isotree.hpp"

namespace ultra {

/// A tabulated isometry between the sphere of radius r in X and the sphere of
/// radius r_prime in Y (same scalar field), given on the residue
/// representatives of the domain sphere at `depth`.
struct SphereIsometrySpec {
    Space domain;
    Space codomain;
    Rational r;
    Rational r_prime;
    int depth = 3;
    std::vector<std::pair<Point, Point>> pairs;
};

struct SpecCheck {
    bool ok = true;
    std::string reason;
};

/// Bijectivity onto the codomain sphere residues plus exact pairwise
/// distance preservation.
SpecCheck verify_sphere_spec(const SphereIsometrySpec& spec);

enum class ObstructionKind { TrivialValuationSingleton, RadiusMismatch, ValueSetMismatch };

struct Obstruction {
    ObstructionKind kind;
    std::string detail;
};

std::string obstruction_kind_name(ObstructionKind kind);

/// The trivial-valuation pathologies: a sphere isometry with r' != r, or
/// value sets that differ. Returns nothing for fields with non-trivial
/// valuation, where any sphere isometry forces r' = r and extends.
std::optional<Obstruction> extension_obstruction(const Space& X, const Space& Y,
                                                 const Rational& r,
                                                 const Rational& r_prime);

/// The extension of tau to the ball B[0, r |alpha|^m]: translation
/// conjugation through x0 inside the sphere, tau itself on it, and
/// alpha^n-dilations of that map on the outward shells.
struct GlobalExtension {
    SphereIsometrySpec spec;
    Point x0;
    Point tau_x0;
    FieldElement alpha;
    int m = 2;
    std::unordered_map<std::string, Point> table; // residue key of x -> tau(x)
};

struct ExtensionResult {
    bool extended = false;
    std::optional<Obstruction> obstruction;
    std::optional<GlobalExtension> extension;
};

/// Runs the extension or reports the obstruction. x0 defaults to the
/// canonical first representative of the domain sphere; alpha to the
/// canonical scalar with smallest |alpha| > 1 (1/p).
ExtensionResult extend_sphere_isometry(const SphereIsometrySpec& spec,
                                       std::optional<Point> x0 = std::nullopt,
                                       std::optional<FieldElement> alpha = std::nullopt,
                                       int m = 2);

Point extension_apply(const GlobalExtension& ext, const Point& x);

/// Cross-space isometry check of fn over the domain-sphere window
/// [lo, hi]: norms carried exactly, distances preserved at every level.
VerifyResult verify_extension(const GlobalExtension& ext, const Rational& lo,
                              const Rational& hi, int depth);

/// The extension agrees with tau on every tabulated representative.
bool extension_restricts_to_spec(const GlobalExtension& ext);

} // namespace ultra
