#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <vector>

#include "ultraiso/field.hpp"
#include "ultraiso/rational.hpp"

namespace ultra {

/// Coordinate vector over the space's field.
struct Point {
    std::vector<FieldElement> coords;
    bool operator==(const Point&) const = default;
};

/// Lexicographic on the canonical coordinate order; the deterministic
/// total order used to pick class representatives and sort outputs.
int compare_points(const Point& a, const Point& b);
bool point_less(const Point& a, const Point& b);

/// Finite-dimensional space with the weighted max norm
/// |x| = max_i w_i |x_i|, weights positive exact rationals.
///
/// Copies are cheap: the descriptor and the decomposition cache behind it
/// are shared. Everything is immutable after construction.
class Space {
public:
    Space(Field field, std::vector<Rational> weights);

    const Field& field() const;
    const std::vector<Rational>& weights() const;
    std::size_t dim() const;
    bool is_finite() const { return field().is_finite(); }
    bool operator==(const Space& other) const;

    Point zero_point() const;
    bool is_zero(const Point& x) const;
    void check_point(const Point& x) const;

    Rational norm(const Point& x) const;
    Rational distance(const Point& x, const Point& y) const;

    Point add(const Point& x, const Point& y) const;
    Point sub(const Point& x, const Point& y) const;
    Point neg(const Point& x) const;
    Point scalar_mul(const FieldElement& lambda, const Point& x) const;

    /// All attainable positive norm values in [lo, hi], sorted ascending.
    /// Finite fields: the weights. Padic: { w_i p^-v : v in window }.
    std::vector<Rational> value_set(const Rational& lo, const Rational& hi) const;
    /// Everything attainable inside the valuation window.
    std::vector<Rational> value_set_all() const;
    /// True when the norm takes a single positive value.
    bool trivial_norm() const;

    Point random_point(Prng& rng) const;

    // Finite spaces: dense indexing 0 .. q^n - 1 for fast enumeration.
    std::uint64_t point_count() const;
    std::uint64_t index_of(const Point& x) const;
    Point point_at(std::uint64_t index) const;
    std::vector<Point> all_points() const;
    /// norm(point_at(i)) as an index into value_set_all() (+1; 0 = zero norm).
    const std::vector<std::uint8_t>& norm_code_table() const;

    /// Internal shared cache handle; used by the geometry layer.
    struct CacheSlot;
    CacheSlot& cache() const;

private:
    struct Data;
    std::shared_ptr<Data> d_;
};

struct Space::CacheSlot {
    std::mutex mutex;
    std::shared_ptr<void> decompositions;
};

} // namespace ultra
