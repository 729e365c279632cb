#include "miwt/domain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include "miwt/error.hpp"
#include "miwt/random.hpp"

namespace miwt {

std::string to_string(ComponentKind kind) {
    switch (kind) {
        case ComponentKind::mesh: return "mesh";
        case ComponentKind::circle: return "circle";
        case ComponentKind::interval: return "interval";
    }
    return "?";
}

namespace {

void check_cap(double cap) {
    if (!(cap > 0.0)) throw std::invalid_argument("radius cap must be positive (or infinite)");
}

}  // namespace

// ---------------------------------------------------------------------------
// ComponentGrid
// ---------------------------------------------------------------------------

ComponentGrid ComponentGrid::from_mesh(std::shared_ptr<const TriangulatedManifold> mesh, double radius_cap) {
    if (!mesh) throw std::invalid_argument("null mesh");
    check_cap(radius_cap);
    const auto& w = mesh->weights();
    (void)mesh->distances();
    for (std::size_t v = 0; v < w.size(); ++v) {
        if (!(w[v] > 0.0) || !std::isfinite(w[v])) {
            throw InputError("mesh vertex " + std::to_string(v) +
                             " has no positive quadrature weight (isolated or only in degenerate triangles)");
        }
    }
    ComponentGrid g;
    g.kind_ = ComponentKind::mesh;
    g.weights_ = w;
    g.radius_cap_ = radius_cap;
    g.mesh_ = std::move(mesh);
    return g;
}

ComponentGrid ComponentGrid::circle(std::size_t points, double circumference, double radius_cap) {
    if (points < 1) throw std::invalid_argument("circle grid needs at least one point");
    if (!(circumference > 0.0) || !std::isfinite(circumference)) {
        throw std::invalid_argument("circle circumference must be positive");
    }
    check_cap(radius_cap);
    ComponentGrid g;
    g.kind_ = ComponentKind::circle;
    g.spacing_ = circumference / static_cast<double>(points);
    g.period_ = circumference;
    g.weights_.assign(points, g.spacing_);
    g.radius_cap_ = radius_cap;
    return g;
}

ComponentGrid ComponentGrid::interval(std::size_t points, double lower, double upper, double radius_cap) {
    if (points < 2) throw std::invalid_argument("interval grid needs at least two points");
    if (!(upper > lower) || !std::isfinite(upper - lower)) throw std::invalid_argument("interval needs lower < upper");
    check_cap(radius_cap);
    ComponentGrid g;
    g.kind_ = ComponentKind::interval;
    g.origin_ = lower;
    g.period_ = upper - lower;
    g.spacing_ = (upper - lower) / static_cast<double>(points - 1);
    g.weights_.assign(points, g.spacing_);
    g.weights_.front() = g.weights_.back() = 0.5 * g.spacing_;
    g.radius_cap_ = radius_cap;
    return g;
}

double ComponentGrid::total_measure() const { return std::accumulate(weights_.begin(), weights_.end(), 0.0); }

double ComponentGrid::distance(std::size_t i, std::size_t j) const {
    const std::size_t n = size();
    if (i >= n || j >= n) throw std::out_of_range("grid point out of range");
    switch (kind_) {
        case ComponentKind::mesh: return mesh_->distances()(i, j);
        case ComponentKind::circle: {
            const std::size_t steps = i > j ? i - j : j - i;
            return static_cast<double>(std::min(steps, n - steps)) * spacing_;
        }
        case ComponentKind::interval: return std::abs(*coordinate(i) - *coordinate(j));
    }
    return kInfinity;
}

void ComponentGrid::set_radius_cap(double cap) {
    check_cap(cap);
    radius_cap_ = cap;
}

std::optional<double> ComponentGrid::coordinate(std::size_t i) const {
    switch (kind_) {
        case ComponentKind::mesh: return std::nullopt;
        case ComponentKind::circle: return static_cast<double>(i) * spacing_;
        case ComponentKind::interval:
            return origin_ + period_ * static_cast<double>(i) / static_cast<double>(size() - 1);
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// ProductDomain
// ---------------------------------------------------------------------------

ProductDomain::ProductDomain(std::vector<ComponentGrid> components) : components_(std::move(components)) {
    if (components_.empty()) throw std::invalid_argument("product domain needs at least one component");
    strides_.assign(components_.size(), 1);
    size_ = 1;
    for (std::size_t l = components_.size(); l-- > 0;) {
        strides_[l] = size_;
        size_ *= components_[l].size();
    }
}

std::vector<std::size_t> ProductDomain::unravel(std::size_t point) const {
    if (point >= size_) throw std::out_of_range("grid point out of range");
    std::vector<std::size_t> idx(components_.size());
    for (std::size_t l = 0; l < components_.size(); ++l) {
        idx[l] = point / strides_[l];
        point %= strides_[l];
    }
    return idx;
}

std::size_t ProductDomain::ravel(std::span<const std::size_t> indices) const {
    if (indices.size() != components_.size()) throw std::invalid_argument("wrong number of component indices");
    std::size_t g = 0;
    for (std::size_t l = 0; l < indices.size(); ++l) {
        if (indices[l] >= components_[l].size()) throw std::out_of_range("component index out of range");
        g += indices[l] * strides_[l];
    }
    return g;
}

double ProductDomain::weight(std::size_t point) const {
    const auto idx = unravel(point);
    double w = 1.0;
    for (std::size_t l = 0; l < idx.size(); ++l) w *= components_[l].weights()[idx[l]];
    return w;
}

std::vector<double> ProductDomain::weights() const {
    std::vector<double> w(size_);
    for (std::size_t g = 0; g < size_; ++g) w[g] = weight(g);
    return w;
}

double ProductDomain::total_measure() const {
    double total = 1.0;
    for (const auto& c : components_) total *= c.total_measure();
    return total;
}

// ---------------------------------------------------------------------------
// Component balls
// ---------------------------------------------------------------------------

double ComponentBall::radius() const { return std::nextafter(reach, kInfinity); }

ComponentBalls::ComponentBalls(std::vector<std::vector<std::uint32_t>> chains, std::vector<ComponentBall> balls)
    : chains_(std::move(chains)), balls_(std::move(balls)), on_chain_(chains_.size()) {
    for (std::size_t b = 0; b < balls_.size(); ++b) {
        const auto& ball = balls_[b];
        if (ball.chain >= chains_.size() || ball.size == 0 || ball.size > chains_[ball.chain].size()) {
            throw std::invalid_argument("component ball does not fit its chain");
        }
        on_chain_[ball.chain].push_back(b);
    }
    for (auto& list : on_chain_) {
        std::sort(list.begin(), list.end(), [&](std::size_t x, std::size_t y) { return balls_[x].size < balls_[y].size; });
    }
}

std::vector<std::size_t> ComponentBalls::support(std::size_t b) const {
    const auto& ball = balls_.at(b);
    const auto& chain = chains_[ball.chain];
    std::vector<std::size_t> s(chain.begin(), chain.begin() + static_cast<std::ptrdiff_t>(ball.size));
    std::sort(s.begin(), s.end());
    return s;
}

std::size_t ComponentBalls::membership_count() const {
    std::size_t total = 0;
    for (const auto& b : balls_) total += b.size;
    return total;
}

namespace {

void fail_limit(double memberships, std::size_t limit) {
    throw InputError("adjustment family needs more than " + std::to_string(limit) +
                     " support memberships (at least " + std::to_string(static_cast<long double>(memberships)) +
                     "); use smaller radius caps or a coarser grid");
}

ComponentBalls mesh_balls(const ComponentGrid& grid, std::size_t limit) {
    const auto& dist = grid.mesh()->distances();
    const std::size_t n = grid.size();
    const double cap = grid.radius_cap();

    // Random 128-bit keys per vertex; a support's hash is the wrapping sum
    // of its members' keys, so prefix hashes along a chain are O(1) each.
    std::vector<std::uint64_t> key1(n), key2(n);
    Rng rng(0x5eed0f5e7ba11ULL);
    for (std::size_t v = 0; v < n; ++v) {
        key1[v] = rng.next();
        key2[v] = rng.next();
    }

    struct Candidate {
        std::uint64_t h1, h2;
        std::uint32_t size, center;
        double reach;
    };
    std::vector<std::vector<std::uint32_t>> chains(n);
    std::vector<Candidate> candidates;
    std::size_t widest_center = 0;
    for (std::size_t c = 0; c < n; ++c) {
        const auto row = dist.row(c);
        auto& order = chains[c];
        for (std::size_t v = 0; v < n; ++v) {
            if (row[v] < cap && std::isfinite(row[v])) order.push_back(static_cast<std::uint32_t>(v));
        }
        std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
            return std::tie(row[a], a) < std::tie(row[b], b);
        });
        std::uint64_t h1 = 0, h2 = 0;
        std::size_t memberships = 0;
        for (std::size_t k = 0; k < order.size(); ++k) {
            h1 += key1[order[k]];
            h2 += key2[order[k]];
            const bool group_end = k + 1 == order.size() || row[order[k + 1]] != row[order[k]];
            if (group_end) {
                candidates.push_back({h1, h2, static_cast<std::uint32_t>(k + 1), static_cast<std::uint32_t>(c),
                                      row[order[k]]});
                memberships += k + 1;
            }
        }
        // Balls around one center are strictly nested, hence distinct.
        widest_center = std::max(widest_center, memberships);
        if (widest_center > limit) fail_limit(static_cast<double>(widest_center), limit);
    }

    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        return std::tie(a.size, a.h1, a.h2, a.reach, a.center) < std::tie(b.size, b.h1, b.h2, b.reach, b.center);
    });
    auto sorted_support = [&](const Candidate& cand) {
        std::vector<std::uint32_t> s(chains[cand.center].begin(), chains[cand.center].begin() + cand.size);
        std::sort(s.begin(), s.end());
        return s;
    };

    std::vector<Candidate> kept;
    std::size_t memberships = 0;
    for (std::size_t i = 0; i < candidates.size();) {
        std::size_t j = i + 1;
        while (j < candidates.size() && candidates[j].size == candidates[i].size && candidates[j].h1 == candidates[i].h1 &&
               candidates[j].h2 == candidates[i].h2) {
            ++j;
        }
        // Equal hashes: confirm set equality so a hash collision can never
        // merge distinct supports.
        std::vector<std::pair<std::vector<std::uint32_t>, std::size_t>> classes;
        for (std::size_t k = i; k < j; ++k) {
            if (j - i == 1) {
                kept.push_back(candidates[k]);
                break;
            }
            auto s = sorted_support(candidates[k]);
            const bool seen = std::any_of(classes.begin(), classes.end(), [&](const auto& cls) { return cls.first == s; });
            if (!seen) {
                classes.emplace_back(std::move(s), k);
                kept.push_back(candidates[k]);
            }
        }
        i = j;
    }
    for (const auto& k : kept) memberships += k.size;
    if (memberships > limit) fail_limit(static_cast<double>(memberships), limit);

    std::sort(kept.begin(), kept.end(),
              [](const Candidate& a, const Candidate& b) { return std::tie(a.center, a.size) < std::tie(b.center, b.size); });
    std::vector<std::size_t> longest(n, 0);
    std::vector<ComponentBall> balls;
    balls.reserve(kept.size());
    for (const auto& k : kept) {
        balls.push_back({k.center, k.size, k.center, std::nullopt, k.reach});
        longest[k.center] = std::max<std::size_t>(longest[k.center], k.size);
    }
    for (std::size_t c = 0; c < n; ++c) {
        chains[c].resize(longest[c]);
        chains[c].shrink_to_fit();
    }
    return ComponentBalls(std::move(chains), std::move(balls));
}

ComponentBalls run_balls(const ComponentGrid& grid, std::size_t limit) {
    const std::size_t n = grid.size();
    const double h = grid.spacing();
    const double cap = grid.radius_cap();
    const bool circle = grid.kind() == ComponentKind::circle;
    auto reach_of = [&](std::size_t size) { return 0.5 * static_cast<double>(size - 1) * h; };
    auto midpoint = [&](std::size_t start, std::size_t size) {
        double c = *grid.coordinate(start) + reach_of(size);
        if (circle && c >= grid.period()) c -= grid.period();
        return c;
    };

    std::vector<std::vector<std::uint32_t>> chains(n);
    std::vector<ComponentBall> balls;
    double memberships = 0.0;
    for (std::size_t start = 0; start < n; ++start) {
        // A proper arc has fewer than n points; the whole circle is a single
        // support, stored once on chain 0.
        const std::size_t max_size = circle ? (start == 0 ? n : n - 1) : n - start;
        for (std::size_t size = 1; size <= max_size; ++size) {
            const double reach = reach_of(size);
            if (!(reach < cap)) break;
            balls.push_back({start, size, start, midpoint(start, size), reach});
            memberships += static_cast<double>(size);
            chains[start].resize(size);
        }
        for (std::size_t k = 0; k < chains[start].size(); ++k) {
            chains[start][k] = static_cast<std::uint32_t>(circle ? (start + k) % n : start + k);
        }
        if (memberships > static_cast<double>(limit)) fail_limit(memberships, limit);
    }
    return ComponentBalls(std::move(chains), std::move(balls));
}

}  // namespace

ComponentBalls enumerate_component_balls(const ComponentGrid& grid, std::size_t membership_limit) {
    if (grid.kind() == ComponentKind::mesh) return mesh_balls(grid, membership_limit);
    return run_balls(grid, membership_limit);
}

// ---------------------------------------------------------------------------
// AdjustmentFamily
// ---------------------------------------------------------------------------

AdjustmentFamily::AdjustmentFamily(std::vector<ComponentBalls> components) : components_(std::move(components)) {
    size_ = components_.empty() ? 0 : 1;
    for (const auto& c : components_) size_ *= c.size();
}

std::vector<std::size_t> AdjustmentFamily::unravel(std::size_t index) const {
    if (index >= size_) throw std::out_of_range("family index out of range");
    std::vector<std::size_t> idx(components_.size());
    for (std::size_t l = components_.size(); l-- > 0;) {
        idx[l] = index % components_[l].size();
        index /= components_[l].size();
    }
    return idx;
}

double AdjustmentFamily::membership_count() const {
    double total = components_.empty() ? 0.0 : 1.0;
    for (const auto& c : components_) total *= static_cast<double>(c.membership_count());
    return total;
}

AdjustmentBall AdjustmentFamily::ball(const ProductDomain& domain, std::size_t index) const {
    if (domain.component_count() != components_.size()) throw std::invalid_argument("family does not match domain");
    AdjustmentBall out;
    out.component_balls = unravel(index);
    std::vector<std::vector<std::size_t>> supports;
    for (std::size_t l = 0; l < components_.size(); ++l) {
        const auto& b = components_[l].balls()[out.component_balls[l]];
        out.anchors.push_back(b.anchor);
        out.centers.push_back(b.center);
        out.radii.push_back(b.radius());
        supports.push_back(components_[l].support(out.component_balls[l]));
    }
    // Cartesian product, odometer style; row-major order keeps it sorted.
    std::vector<std::size_t> pos(supports.size(), 0), idx(supports.size());
    for (;;) {
        double w = 1.0;
        for (std::size_t l = 0; l < supports.size(); ++l) {
            idx[l] = supports[l][pos[l]];
            w *= domain.component(l).weights()[idx[l]];
        }
        out.support.push_back(domain.ravel(idx));
        out.support_weights.push_back(w);
        std::size_t l = supports.size();
        while (l > 0) {
            --l;
            if (++pos[l] < supports[l].size()) break;
            pos[l] = 0;
            if (l == 0) return out;
        }
    }
}

AdjustmentFamily enumerate_family(const ProductDomain& domain, std::size_t membership_limit) {
    std::vector<ComponentBalls> parts;
    double memberships = 1.0;
    for (std::size_t l = 0; l < domain.component_count(); ++l) {
        parts.push_back(enumerate_component_balls(domain.component(l), membership_limit));
        memberships *= static_cast<double>(parts.back().membership_count());
        if (memberships > static_cast<double>(membership_limit)) fail_limit(memberships, membership_limit);
    }
    return AdjustmentFamily(std::move(parts));
}

double ball_weight(const AdjustmentBall& ball) {
    return std::accumulate(ball.support_weights.begin(), ball.support_weights.end(), 0.0);
}

}  // namespace miwt
