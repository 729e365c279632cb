#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "miwt/mesh.hpp"

namespace miwt {

enum class ComponentKind { mesh, circle, interval };

std::string to_string(ComponentKind kind);

/// One factor M_l of the product domain, discretized: points, quadrature
/// weights, a metric, and the radius cap r_l of its adjustment balls.
class ComponentGrid {
public:
    /// The mesh must have weights and distances computed; every vertex needs
    /// a positive weight.
    static ComponentGrid from_mesh(std::shared_ptr<const TriangulatedManifold> mesh, double radius_cap);
    /// `points` equally spaced points on a circle; arc-length metric.
    static ComponentGrid circle(std::size_t points, double circumference, double radius_cap);
    /// `points` equally spaced points on [lower, upper]; trapezoid weights.
    static ComponentGrid interval(std::size_t points, double lower, double upper, double radius_cap);

    ComponentKind kind() const { return kind_; }
    std::size_t size() const { return weights_.size(); }
    const std::vector<double>& weights() const { return weights_; }
    double total_measure() const;
    double distance(std::size_t i, std::size_t j) const;

    double radius_cap() const { return radius_cap_; }
    void set_radius_cap(double cap);

    /// Position along the circle or interval; meshes have none.
    std::optional<double> coordinate(std::size_t i) const;
    /// Grid spacing of a circle or interval.
    double spacing() const { return spacing_; }
    /// Circumference of a circle component.
    double period() const { return period_; }
    const TriangulatedManifold* mesh() const { return mesh_.get(); }

private:
    ComponentKind kind_ = ComponentKind::mesh;
    std::vector<double> weights_;
    double radius_cap_ = kInfinity;
    double origin_ = 0.0;
    double spacing_ = 0.0;
    double period_ = 0.0;
    std::shared_ptr<const TriangulatedManifold> mesh_;
};

/// M = M_1 x ... x M_L. Grid points are numbered row-major: the last
/// component varies fastest.
class ProductDomain {
public:
    explicit ProductDomain(std::vector<ComponentGrid> components);

    std::size_t component_count() const { return components_.size(); }
    const ComponentGrid& component(std::size_t l) const { return components_.at(l); }
    ComponentGrid& component(std::size_t l) { return components_.at(l); }

    std::size_t size() const { return size_; }
    std::vector<std::size_t> unravel(std::size_t point) const;
    std::size_t ravel(std::span<const std::size_t> indices) const;

    /// Product of the component weights of a grid point.
    double weight(std::size_t point) const;
    std::vector<double> weights() const;
    double total_measure() const;

private:
    std::vector<ComponentGrid> components_;
    std::vector<std::size_t> strides_;
    std::size_t size_ = 0;
};

/// A ball of one component: the first `size` points of chain `chain`.
/// Each chain lists points in the order in which growing balls around one
/// center absorb them, so the balls on a chain are nested.
struct ComponentBall {
    std::size_t chain = 0;
    std::size_t size = 0;
    /// Mesh: the center vertex. Circle/interval: the first point of the run.
    std::size_t anchor = 0;
    /// Circle/interval: coordinate of the run's midpoint.
    std::optional<double> center;
    /// Largest center-to-member distance. The support is realized by every
    /// radius in (reach, next distance], so it is admissible iff reach < cap.
    double reach = 0.0;

    /// Smallest radius realizing this support.
    double radius() const;
};

/// Distinct ball supports of one component under its radius cap.
class ComponentBalls {
public:
    ComponentBalls() = default;
    ComponentBalls(std::vector<std::vector<std::uint32_t>> chains, std::vector<ComponentBall> balls);

    const std::vector<std::vector<std::uint32_t>>& chains() const { return chains_; }
    const std::vector<ComponentBall>& balls() const { return balls_; }
    std::size_t size() const { return balls_.size(); }
    /// Ball indices on each chain, by increasing size.
    const std::vector<std::vector<std::size_t>>& balls_on_chain() const { return on_chain_; }

    /// Sorted point indices of ball b.
    std::vector<std::size_t> support(std::size_t b) const;
    /// Sum over balls of their support sizes.
    std::size_t membership_count() const;

private:
    std::vector<std::vector<std::uint32_t>> chains_;
    std::vector<ComponentBall> balls_;
    std::vector<std::vector<std::size_t>> on_chain_;
};

inline constexpr std::size_t kDefaultMembershipLimit = 50'000'000;

/// Every distinct support {x : d(center, x) < radius} with radius <= cap.
/// Meshes use vertex centers. Circles and intervals use continuous
/// centers, so every contiguous run of grid points is a support.
/// Duplicate supports keep the realization with the smallest reach, then
/// the lowest anchor. Throws InputError once the memberships are known to
/// exceed `membership_limit`.
ComponentBalls enumerate_component_balls(const ComponentGrid& grid,
                                         std::size_t membership_limit = kDefaultMembershipLimit);

/// One product ball I = B_1 x ... x B_L, materialized.
struct AdjustmentBall {
    std::vector<std::size_t> component_balls;
    std::vector<std::size_t> anchors;
    std::vector<std::optional<double>> centers;
    std::vector<double> radii;
    /// Grid points of the support (sorted) and their product weights.
    std::vector<std::size_t> support;
    std::vector<double> support_weights;
};

/// The adjustment family: all products of component balls. Product balls
/// are numbered row-major over the component ball indices.
class AdjustmentFamily {
public:
    AdjustmentFamily() = default;
    explicit AdjustmentFamily(std::vector<ComponentBalls> components);

    std::size_t component_count() const { return components_.size(); }
    const ComponentBalls& component(std::size_t l) const { return components_.at(l); }
    std::size_t size() const { return size_; }
    std::vector<std::size_t> unravel(std::size_t index) const;

    /// Sum of support sizes over all product balls.
    double membership_count() const;

    AdjustmentBall ball(const ProductDomain& domain, std::size_t index) const;

private:
    std::vector<ComponentBalls> components_;
    std::size_t size_ = 0;
};

AdjustmentFamily enumerate_family(const ProductDomain& domain,
                                  std::size_t membership_limit = kDefaultMembershipLimit);

/// Sum of the product weights over the ball's support.
double ball_weight(const AdjustmentBall& ball);

}  // namespace miwt
