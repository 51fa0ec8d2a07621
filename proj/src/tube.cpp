#include "tailcal/tube.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <queue>

#include "tailcal/error.hpp"

namespace tailcal {

ActionSet ActionSet::from_points(std::span<const Vec2> points) {
    ActionSet s;
    s.n = points.size();
    s.timesteps = 1;
    s.pts.assign(points.begin(), points.end());
    return s;
}

ActionSet ActionSet::from_actions(std::span<const Trajectory> actions, double window) {
    if (actions.empty()) throw Error(ErrorKind::size, "no actions");
    const std::size_t t_count = actions[0].sample_index(window) + 1;
    ActionSet s;
    s.n = actions.size();
    s.timesteps = t_count;
    s.pts.reserve(s.n * t_count);
    for (const Trajectory& a : actions) {
        if (a.sample_rate() != actions[0].sample_rate()) {
            throw Error(ErrorKind::schema, "actions disagree on sample rate");
        }
        if (a.size() < t_count) throw Error(ErrorKind::range, "action shorter than the window");
        for (std::size_t t = 0; t < t_count; ++t) s.pts.push_back(a.positions()[t]);
    }
    return s;
}

QuantileTube::QuantileTube(std::vector<CrossSection> sections, double target_delta,
                           std::size_t coverage_count)
    : sections_(std::move(sections)), target_delta_(target_delta), coverage_count_(coverage_count) {}

bool QuantileTube::contains(std::span<const Vec2> action_window) const {
    if (action_window.size() != sections_.size()) {
        throw Error(ErrorKind::range, "action window length does not match the tube");
    }
    for (std::size_t t = 0; t < sections_.size(); ++t) {
        if (!sections_[t].contains(action_window[t])) return false;
    }
    return true;
}

bool ScenarioHull::contains(std::span<const Vec2> action_window) const {
    if (action_window.size() != sections.size()) {
        throw Error(ErrorKind::range, "action window length does not match the hull");
    }
    for (std::size_t t = 0; t < sections.size(); ++t) {
        if (!sections[t].contains(action_window[t])) return false;
    }
    return true;
}

namespace {

using u32 = std::uint32_t;

double section_tol(std::span<const Vec2> pts) {
    double lo_x = std::numeric_limits<double>::infinity(), hi_x = -lo_x;
    double lo_y = lo_x, hi_y = hi_x;
    for (const Vec2& p : pts) {
        lo_x = std::min(lo_x, p.x);
        hi_x = std::max(hi_x, p.x);
        lo_y = std::min(lo_y, p.y);
        hi_y = std::max(hi_y, p.y);
    }
    return 1e-9 * std::max(1.0, std::hypot(hi_x - lo_x, hi_y - lo_y));
}

CrossSection make_section(std::span<const Vec2> pts) {
    CrossSection s;
    s.polygon = convex_hull(pts);
    s.tol = section_tol(pts);
    return s;
}

// Per-timestep peeling state.
class Layer {
  public:
    virtual ~Layer() = default;
    // Decrease of this section's measure if `a` were removed (0 off the boundary).
    virtual double dec(u32 a) const = 0;
    // `a` is already marked dead in the shared alive mask; appends actions
    // whose dec may have changed.
    virtual void remove(u32 a, std::vector<u32>& touched) = 0;
    // Actions that may have nonzero dec right now.
    virtual void seed(std::vector<u32>& touched) const = 0;
};

// Collinear (or collapsed) section: measure is the extent along the line.
class Layer1D final : public Layer {
  public:
    Layer1D(std::span<const Vec2> pts, const std::vector<char>& alive) : alive_(&alive) {
        const std::size_t n = pts.size();
        proj_.resize(n);
        double lo_x = std::numeric_limits<double>::infinity(), hi_x = -lo_x;
        double lo_y = lo_x, hi_y = hi_x;
        std::size_t ax_lo = 0, ax_hi = 0, ay_lo = 0, ay_hi = 0;
        bool any = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (!alive[i]) continue;
            any = true;
            if (pts[i].x < lo_x) lo_x = pts[i].x, ax_lo = i;
            if (pts[i].x > hi_x) hi_x = pts[i].x, ax_hi = i;
            if (pts[i].y < lo_y) lo_y = pts[i].y, ay_lo = i;
            if (pts[i].y > hi_y) hi_y = pts[i].y, ay_hi = i;
        }
        Vec2 dir{1.0, 0.0};
        if (any) {
            const Vec2 d = (hi_x - lo_x >= hi_y - lo_y) ? pts[ax_hi] - pts[ax_lo]
                                                        : pts[ay_hi] - pts[ay_lo];
            const double len = std::hypot(d.x, d.y);
            if (len > 0.0) dir = {d.x / len, d.y / len};
        }
        for (std::size_t i = 0; i < n; ++i) proj_[i] = pts[i].x * dir.x + pts[i].y * dir.y;
        sorted_.resize(n);
        std::iota(sorted_.begin(), sorted_.end(), u32{0});
        std::sort(sorted_.begin(), sorted_.end(), [&](u32 a, u32 b) {
            if (proj_[a] != proj_[b]) return proj_[a] < proj_[b];
            return a < b;
        });
        lo_ = 0;
        hi_ = n;
        refresh();
    }

    double dec(u32 a) const override {
        if (a == min_id_) return dec_min_;
        if (a == max_id_) return dec_max_;
        return 0.0;
    }

    void remove(u32 /*a*/, std::vector<u32>& touched) override {
        refresh();
        if (min_id_ != kNone) touched.push_back(min_id_);
        if (max_id_ != kNone && max_id_ != min_id_) touched.push_back(max_id_);
    }

    void seed(std::vector<u32>& touched) const override {
        if (min_id_ != kNone) touched.push_back(min_id_);
        if (max_id_ != kNone && max_id_ != min_id_) touched.push_back(max_id_);
    }

  private:
    static constexpr u32 kNone = std::numeric_limits<u32>::max();

    void refresh() {
        const auto& alive = *alive_;
        while (lo_ < hi_ && !alive[sorted_[lo_]]) ++lo_;
        while (hi_ > lo_ && !alive[sorted_[hi_ - 1]]) --hi_;
        min_id_ = max_id_ = kNone;
        dec_min_ = dec_max_ = 0.0;
        if (lo_ >= hi_) return;
        min_id_ = sorted_[lo_];
        max_id_ = sorted_[hi_ - 1];
        if (min_id_ == max_id_) return;
        std::size_t i = lo_ + 1;
        while (!alive[sorted_[i]]) ++i;
        dec_min_ = proj_[sorted_[i]] - proj_[min_id_];
        std::size_t j = hi_ - 2;
        while (!alive[sorted_[j]]) --j;
        dec_max_ = proj_[max_id_] - proj_[sorted_[j]];
    }

    const std::vector<char>* alive_;
    std::vector<double> proj_;
    std::vector<u32> sorted_;
    std::size_t lo_ = 0, hi_ = 0;
    u32 min_id_ = kNone, max_id_ = kNone;
    double dec_min_ = 0.0, dec_max_ = 0.0;
};

// Full 2D section: circular hull list plus a uniform grid for pocket lookups.
// When the hull collapses below a triangle the layer rebuilds as Layer1D.
class Layer2D final : public Layer {
  public:
    Layer2D(std::vector<Vec2> pts, const std::vector<char>& alive)
        : pts_(std::move(pts)), alive_(&alive) {
        const std::size_t n = pts_.size();
        next_.assign(n, 0);
        prev_.assign(n, 0);
        on_hull_.assign(n, 0);
        dec_.assign(n, 0.0);

        double lo_x = std::numeric_limits<double>::infinity(), hi_x = -lo_x;
        double lo_y = lo_x, hi_y = hi_x;
        for (const Vec2& p : pts_) {
            lo_x = std::min(lo_x, p.x);
            hi_x = std::max(hi_x, p.x);
            lo_y = std::min(lo_y, p.y);
            hi_y = std::max(hi_y, p.y);
        }
        const double scale = std::max({hi_x - lo_x, hi_y - lo_y, 1e-300});
        eps_ = 1e-12 * scale * scale;

        // static point grid, queried with an alive filter
        const std::size_t dim =
            std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(n) / 2.0)));
        gx_ = (hi_x > lo_x) ? dim : 1;
        gy_ = (hi_y > lo_y) ? dim : 1;
        gx0_ = lo_x;
        gy0_ = lo_y;
        cw_ = (hi_x - lo_x) / static_cast<double>(gx_);
        ch_ = (hi_y - lo_y) / static_cast<double>(gy_);
        if (cw_ <= 0.0) cw_ = 1.0;
        if (ch_ <= 0.0) ch_ = 1.0;
        std::vector<u32> counts(gx_ * gy_ + 1, 0);
        for (const Vec2& p : pts_) ++counts[cell_of(p) + 1];
        for (std::size_t c = 1; c < counts.size(); ++c) counts[c] += counts[c - 1];
        cell_start_ = counts;
        cell_items_.resize(n);
        std::vector<u32> cursor(cell_start_.begin(), cell_start_.end() - 1);
        for (std::size_t i = 0; i < n; ++i) cell_items_[cursor[cell_of(pts_[i])]++] = static_cast<u32>(i);

        const std::vector<std::size_t> hull = convex_hull_indices(pts_);
        hull_size_ = hull.size();
        if (hull_size_ < 3) {
            fallback_ = std::make_unique<Layer1D>(pts_, alive);
            return;
        }
        for (std::size_t i = 0; i < hull_size_; ++i) {
            const u32 a = static_cast<u32>(hull[i]);
            const u32 b = static_cast<u32>(hull[(i + 1) % hull_size_]);
            next_[a] = b;
            prev_[b] = a;
            on_hull_[a] = 1;
        }
        anchor_ = static_cast<u32>(hull[0]);
        for (std::size_t i : hull) dec_[i] = eval(static_cast<u32>(i), nullptr);
    }

    double dec(u32 a) const override {
        if (fallback_) return fallback_->dec(a);
        return on_hull_[a] ? dec_[a] : 0.0;
    }

    void remove(u32 a, std::vector<u32>& touched) override {
        if (fallback_) {
            fallback_->remove(a, touched);
            return;
        }
        if (!on_hull_[a]) {
            // an interior death still shrinks the bulge of any pocket holding it
            touch_pocket_owners(a, touched);
            return;
        }
        std::vector<u32> chain;
        eval(a, &chain);
        const u32 p = prev_[a];
        const u32 n = next_[a];
        on_hull_[a] = 0;
        --hull_size_;
        u32 cur = p;
        for (u32 q : chain) {
            next_[cur] = q;
            prev_[q] = cur;
            on_hull_[q] = 1;
            ++hull_size_;
            cur = q;
        }
        next_[cur] = n;
        prev_[n] = cur;
        if (hull_size_ < 3) {
            fallback_ = std::make_unique<Layer1D>(pts_, *alive_);
            fallback_->seed(touched);
            return;
        }
        anchor_ = p;
        dec_[p] = eval(p, nullptr);
        dec_[n] = eval(n, nullptr);
        touched.push_back(p);
        touched.push_back(n);
        for (u32 q : chain) {
            dec_[q] = eval(q, nullptr);
            touched.push_back(q);
            // promotion also pulls q out of overlapping neighbor pockets
            touch_pocket_owners(q, touched);
        }
    }

    void seed(std::vector<u32>& touched) const override {
        if (fallback_) {
            fallback_->seed(touched);
            return;
        }
        for (std::size_t i = 0; i < pts_.size(); ++i) {
            if (on_hull_[i]) touched.push_back(static_cast<u32>(i));
        }
    }

  private:
    // Re-evaluates every hull vertex whose pocket filter accepts q; q has just
    // left the candidate pool (died interior, or was promoted onto the hull).
    void touch_pocket_owners(u32 q, std::vector<u32>& touched) {
        const Vec2 Q = pts_[q];
        u32 w = anchor_;
        do {
            const Vec2 P = pts_[prev_[w]], V = pts_[w], N = pts_[next_[w]];
            if (w != q && cross(P, N, Q) < -eps_ && cross(P, V, Q) >= -eps_ &&
                cross(V, N, Q) >= -eps_) {
                dec_[w] = eval(w, nullptr);
                touched.push_back(w);
            }
            w = next_[w];
        } while (w != anchor_);
    }

    std::size_t cell_of(Vec2 p) const {
        auto clamp_idx = [](double v, std::size_t n) {
            if (v < 0.0) return std::size_t{0};
            const std::size_t i = static_cast<std::size_t>(v);
            return std::min(i, n - 1);
        };
        const std::size_t cx = clamp_idx((p.x - gx0_) / cw_, gx_);
        const std::size_t cy = clamp_idx((p.y - gy0_) / ch_, gy_);
        return cy * gx_ + cx;
    }

    // Area decrease from removing hull vertex v. With `chain` non-null also
    // reports the interior points promoted to the hull, in CCW order.
    double eval(u32 v, std::vector<u32>* chain) const {
        const u32 p = prev_[v];
        const u32 n = next_[v];
        const Vec2 P = pts_[p], V = pts_[v], N = pts_[n];
        const double corner2 = cross(P, V, N);  // >= 0 up to roundoff (CCW hull)

        // pocket candidates: alive interior points beyond the chord P-N
        cand_.clear();
        const double bx0 = std::min({P.x, V.x, N.x}), bx1 = std::max({P.x, V.x, N.x});
        const double by0 = std::min({P.y, V.y, N.y}), by1 = std::max({P.y, V.y, N.y});
        const std::size_t c0 = cell_of({bx0, by0});
        const std::size_t c1 = cell_of({bx1, by1});
        const std::size_t cx0 = c0 % gx_, cy0 = c0 / gx_;
        const std::size_t cx1 = c1 % gx_, cy1 = c1 / gx_;
        const auto& alive = *alive_;
        for (std::size_t cy = cy0; cy <= cy1; ++cy) {
            for (std::size_t cx = cx0; cx <= cx1; ++cx) {
                const std::size_t c = cy * gx_ + cx;
                for (u32 k = cell_start_[c]; k < cell_start_[c + 1]; ++k) {
                    const u32 q = cell_items_[k];
                    if (!alive[q] || on_hull_[q] || q == v) continue;
                    const Vec2 Q = pts_[q];
                    if (cross(P, N, Q) >= -eps_) continue;  // on or inside the chord
                    if (cross(P, V, Q) < -eps_ || cross(V, N, Q) < -eps_) continue;
                    cand_.push_back(q);
                }
            }
        }
        if (cand_.empty()) {
            if (chain) chain->clear();
            return 0.5 * std::max(corner2, 0.0);
        }

        // convex chain over the pocket, bulging toward v
        const Vec2 dir = N - P;
        std::sort(cand_.begin(), cand_.end(), [&](u32 a, u32 b) {
            const double ta = (pts_[a].x - P.x) * dir.x + (pts_[a].y - P.y) * dir.y;
            const double tb = (pts_[b].x - P.x) * dir.x + (pts_[b].y - P.y) * dir.y;
            if (ta != tb) return ta < tb;
            return a < b;
        });
        stack_.clear();
        stack_.push_back(p);
        auto pos = [&](u32 id) { return pts_[id]; };
        for (u32 q : cand_) {
            while (stack_.size() >= 2 &&
                   cross(pos(stack_[stack_.size() - 2]), pos(stack_.back()), pts_[q]) <= 0.0) {
                stack_.pop_back();
            }
            stack_.push_back(q);
        }
        while (stack_.size() >= 2 &&
               cross(pos(stack_[stack_.size() - 2]), pos(stack_.back()), N) <= 0.0) {
            stack_.pop_back();
        }
        // bulge area between the chord and the new chain
        double s2 = 0.0;
        Vec2 prev_pt = P;
        for (std::size_t i = 1; i < stack_.size(); ++i) {
            const Vec2 cur = pos(stack_[i]);
            s2 += prev_pt.x * cur.y - cur.x * prev_pt.y;
            prev_pt = cur;
        }
        s2 += prev_pt.x * N.y - N.x * prev_pt.y;
        s2 += N.x * P.y - P.x * N.y;
        const double bulge2 = std::abs(s2);
        if (chain) chain->assign(stack_.begin() + 1, stack_.end());
        return 0.5 * std::max(corner2 - bulge2, 0.0);
    }

    std::vector<Vec2> pts_;
    const std::vector<char>* alive_;
    std::vector<u32> next_, prev_;
    std::vector<char> on_hull_;
    std::vector<double> dec_;
    u32 anchor_ = 0;
    std::size_t hull_size_ = 0;
    double eps_ = 0.0;

    double gx0_ = 0.0, gy0_ = 0.0, cw_ = 1.0, ch_ = 1.0;
    std::size_t gx_ = 1, gy_ = 1;
    std::vector<u32> cell_start_;
    std::vector<u32> cell_items_;

    std::unique_ptr<Layer1D> fallback_;
    mutable std::vector<u32> cand_;
    mutable std::vector<u32> stack_;
};

std::unique_ptr<Layer> make_layer(const ActionSet& actions, std::size_t t,
                                  const std::vector<char>& alive) {
    std::vector<Vec2> pts(actions.n);
    for (std::size_t a = 0; a < actions.n; ++a) pts[a] = actions.at(a, t);
    const std::vector<std::size_t> hull = convex_hull_indices(pts);
    if (hull.size() < 3) return std::make_unique<Layer1D>(pts, alive);
    return std::make_unique<Layer2D>(std::move(pts), alive);
}

struct Cand {
    double dec;
    u32 action;
    u32 stamp;
};

struct CandLess {
    bool operator()(const Cand& a, const Cand& b) const {
        if (a.dec != b.dec) return a.dec < b.dec;
        return a.action > b.action;  // ties go to the lowest index
    }
};

}  // namespace

GreedyPeel::GreedyPeel(const ActionSet& actions, std::size_t max_removals) : actions_(&actions) {
    if (actions.n == 0 || actions.timesteps == 0) throw Error(ErrorKind::size, "empty action set");
    if (actions.pts.size() != actions.n * actions.timesteps) {
        throw Error(ErrorKind::schema, "action set shape mismatch");
    }
    if (max_removals >= actions.n) {
        throw Error(ErrorKind::range, "cannot remove every action");
    }
    const std::size_t n = actions.n;
    std::vector<char> alive(n, 1);
    std::vector<std::unique_ptr<Layer>> layers;
    layers.reserve(actions.timesteps);
    for (std::size_t t = 0; t < actions.timesteps; ++t) layers.push_back(make_layer(actions, t, alive));

    std::vector<u32> stamp(n, 0);
    auto gdec = [&](u32 a) {
        double s = 0.0;
        for (const auto& l : layers) s += l->dec(a);
        return s;
    };
    std::priority_queue<Cand, std::vector<Cand>, CandLess> heap;
    std::vector<u32> touched;
    for (const auto& l : layers) l->seed(touched);
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    for (u32 a : touched) heap.push({gdec(a), a, 0});

    order_.reserve(max_removals);
    std::size_t next_fallback = 0;  // lowest index possibly alive, for all-zero ties
    for (std::size_t r = 0; r < max_removals; ++r) {
        Cand held{};
        bool from_heap = false;
        while (!heap.empty()) {
            const Cand top = heap.top();
            heap.pop();
            if (!alive[top.action] || top.stamp != stamp[top.action]) continue;
            held = top;
            from_heap = true;
            break;
        }
        while (next_fallback < n && !alive[next_fallback]) ++next_fallback;
        u32 pick;
        if (!from_heap) {
            // every remaining action has zero decrease
            pick = static_cast<u32>(next_fallback);
        } else if (held.dec <= 0.0 && next_fallback < held.action) {
            // a zero decrease ties with every off-heap action; lowest index wins
            pick = static_cast<u32>(next_fallback);
            heap.push(held);
        } else {
            pick = held.action;
        }

        order_.push_back(pick);
        alive[pick] = 0;
        touched.clear();
        for (const auto& l : layers) l->remove(pick, touched);
        std::sort(touched.begin(), touched.end());
        touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
        for (u32 a : touched) {
            if (!alive[a]) continue;
            ++stamp[a];
            heap.push({gdec(a), a, stamp[a]});
        }
    }
}

QuantileTube GreedyPeel::tube_at(double delta) const {
    if (!(delta >= 0.0 && delta < 1.0)) throw Error(ErrorKind::range, "delta must lie in [0, 1)");
    const std::size_t n = actions_->n;
    const std::size_t k = static_cast<std::size_t>(delta * static_cast<double>(n));
    if (k > order_.size()) {
        throw Error(ErrorKind::range, "delta exceeds the peeled prefix");
    }
    std::vector<char> alive(n, 1);
    for (std::size_t i = 0; i < k; ++i) alive[order_[i]] = 0;
    std::vector<CrossSection> sections;
    sections.reserve(actions_->timesteps);
    std::vector<Vec2> col;
    col.reserve(n - k);
    for (std::size_t t = 0; t < actions_->timesteps; ++t) {
        col.clear();
        for (std::size_t a = 0; a < n; ++a) {
            if (alive[a]) col.push_back(actions_->at(a, t));
        }
        sections.push_back(make_section(col));
    }
    return QuantileTube(std::move(sections), delta, n - k);
}

QuantileTube fit_quantile_tube(const ActionSet& actions, double delta) {
    if (!(delta >= 0.0 && delta < 1.0)) throw Error(ErrorKind::range, "delta must lie in [0, 1)");
    const std::size_t k = static_cast<std::size_t>(delta * static_cast<double>(actions.n));
    return GreedyPeel(actions, k).tube_at(delta);
}

ScenarioHull fit_scenario_hull(const ActionSet& actions) {
    if (actions.n == 0 || actions.timesteps == 0) throw Error(ErrorKind::size, "empty action set");
    ScenarioHull hull;
    hull.sections.reserve(actions.timesteps);
    std::vector<Vec2> col(actions.n);
    for (std::size_t t = 0; t < actions.timesteps; ++t) {
        for (std::size_t a = 0; a < actions.n; ++a) col[a] = actions.at(a, t);
        hull.sections.push_back(make_section(col));
        hull.support_count = std::max(hull.support_count, hull.sections.back().polygon.size());
    }
    return hull;
}

double campi_violation_bound(std::size_t n, std::size_t k, double beta) {
    if (k < 1 || k >= n) throw Error(ErrorKind::range, "need N > k >= 1");
    if (!(beta > 0.0 && beta < 1.0)) throw Error(ErrorKind::range, "beta must lie in (0, 1)");
    const double nd = static_cast<double>(n);
    const double log_beta = std::log(beta);
    // log of sum_{i<k} C(N,i) eps^i (1-eps)^(N-i)
    auto log_tail = [&](double eps) {
        const double le = std::log(eps);
        const double l1e = std::log1p(-eps);
        double mx = -std::numeric_limits<double>::infinity();
        std::vector<double> terms(k);
        for (std::size_t i = 0; i < k; ++i) {
            const double id = static_cast<double>(i);
            const double lc =
                std::lgamma(nd + 1.0) - std::lgamma(id + 1.0) - std::lgamma(nd - id + 1.0);
            terms[i] = lc + id * le + (nd - id) * l1e;
            mx = std::max(mx, terms[i]);
        }
        double s = 0.0;
        for (double t : terms) s += std::exp(t - mx);
        return mx + std::log(s);
    };
    // the k=1 solution lower-bounds the root; bisect in log eps
    const double eps1 = 1.0 - std::exp(log_beta / nd);
    double lo = std::log(std::max(eps1 * 0.5, 1e-300));
    double hi = 0.0;  // eps = 1
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (log_tail(std::exp(mid)) <= log_beta) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return std::exp(hi);
}

}  // namespace tailcal
