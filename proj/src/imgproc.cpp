#include "panq/imgproc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace panq {

namespace {

constexpr double kGeomEps = 1e-9;

// Reflected index with the edge sample repeated: for n = 3 the extension is
// ... c b a | a b c | c b a ...  Valid for any offset, so a 1x1 image blurs
// to itself.
int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
}

void convolve_rows(const GrayImage& src, const Kernel1D& kernel, GrayImage& dst) {
    const int r = kernel.radius;
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < src.width; ++x) {
            double acc = 0.0;
            for (int k = -r; k <= r; ++k)
                acc += kernel.weights[k + r] * src.at(reflect_index(x + k, src.width), y);
            dst.at(x, y) = acc;
        }
    }
}

void convolve_cols(const GrayImage& src, const Kernel1D& kernel, GrayImage& dst) {
    const int r = kernel.radius;
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < src.width; ++x) {
            double acc = 0.0;
            for (int k = -r; k <= r; ++k)
                acc += kernel.weights[k + r] * src.at(x, reflect_index(y + k, src.height));
            dst.at(x, y) = acc;
        }
    }
}

std::array<std::int64_t, 256> binned_histogram(const GrayImage& region) {
    std::array<std::int64_t, 256> hist{};
    for (double v : region.intensities) ++hist[static_cast<std::size_t>(intensity_bin(v, region.bitdepth))];
    return hist;
}

}  // namespace

Kernel1D gaussian_kernel(double sigma) {
    if (!(sigma > 0.0))
        throw NonPositiveSigma("sigma must be > 0, got " + std::to_string(sigma));
    Kernel1D kernel;
    kernel.radius = static_cast<int>(std::ceil(3.0 * sigma));
    kernel.weights.resize(2 * kernel.radius + 1);
    double sum = 0.0;
    for (int k = -kernel.radius; k <= kernel.radius; ++k) {
        double w = std::exp(-(static_cast<double>(k) * k) / (2.0 * sigma * sigma));
        kernel.weights[k + kernel.radius] = w;
        sum += w;
    }
    for (double& w : kernel.weights) w /= sum;
    return kernel;
}

GrayImage blur(const GrayImage& img, double sigma) {
    Kernel1D kernel = gaussian_kernel(sigma);
    GrayImage tmp(img.width, img.height, img.bitdepth);
    GrayImage out(img.width, img.height, img.bitdepth);
    convolve_rows(img, kernel, tmp);
    convolve_cols(tmp, kernel, out);
    return out;
}

int intensity_bin(double value, int bitdepth) {
    const double scale = bitdepth == 16 ? 256.0 : 1.0;
    int bin = static_cast<int>(std::floor(value / scale));
    return std::clamp(bin, 0, 255);
}

int otsu_threshold(const GrayImage& region) {
    const std::array<std::int64_t, 256> hist = binned_histogram(region);
    int nonzero = 0;
    for (std::int64_t h : hist) nonzero += h != 0;
    if (nonzero < 2)
        throw DegenerateRegion("region has a single distinct binned intensity; no threshold separates it");

    std::int64_t total_count = 0;
    std::int64_t total_sum = 0;
    for (int b = 0; b < 256; ++b) {
        total_count += hist[b];
        total_sum += hist[b] * b;
    }

    // Counts and intensity sums are exact integers in double precision, so the
    // prefix-sum scan is bit-identical to a per-threshold exhaustive search.
    int best_t = 0;
    double best_v = -1.0;
    std::int64_t n0 = 0, s0 = 0;
    for (int t = 0; t < 256; ++t) {
        n0 += hist[t];
        s0 += hist[t] * t;
        const std::int64_t n1 = total_count - n0;
        const std::int64_t s1 = total_sum - s0;
        if (n0 == 0 || n1 == 0) continue;
        const double w0 = static_cast<double>(n0) / static_cast<double>(total_count);
        const double w1 = static_cast<double>(n1) / static_cast<double>(total_count);
        const double mu0 = static_cast<double>(s0) / static_cast<double>(n0);
        const double mu1 = static_cast<double>(s1) / static_cast<double>(n1);
        const double v = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (v > best_v) {
            best_v = v;
            best_t = t;
        }
    }
    return best_t;
}

BinaryMask threshold_foreground(const GrayImage& region, int threshold_bin) {
    BinaryMask mask(region.width, region.height);
    for (int y = 0; y < region.height; ++y)
        for (int x = 0; x < region.width; ++x)
            if (intensity_bin(region.at(x, y), region.bitdepth) > threshold_bin) mask.set(x, y, true);
    return mask;
}

std::vector<BinaryMask> connected_components(const BinaryMask& mask) {
    std::vector<BinaryMask> components;
    std::vector<std::uint8_t> visited(mask.bits.size(), 0);
    std::vector<std::size_t> stack;

    const int w = mask.width;
    const int h = mask.height;
    for (std::size_t seed = 0; seed < mask.bits.size(); ++seed) {
        if (!mask.bits[seed] || visited[seed]) continue;
        BinaryMask component(w, h);
        stack.assign(1, seed);
        visited[seed] = 1;
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            component.bits[p] = 1;
            ++component.area;
            const int x = static_cast<int>(p % w);
            const int y = static_cast<int>(p / w);
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const int nx = x + dx;
                    const int ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    const std::size_t q = static_cast<std::size_t>(ny) * w + nx;
                    if (mask.bits[q] && !visited[q]) {
                        visited[q] = 1;
                        stack.push_back(q);
                    }
                }
            }
        }
        components.push_back(std::move(component));
    }
    // Seeds are discovered in row-major order, so a stable sort keeps the
    // smallest-first-pixel order among equal areas.
    std::stable_sort(components.begin(), components.end(),
                     [](const BinaryMask& a, const BinaryMask& b) { return a.area > b.area; });
    return components;
}

namespace {

double cross(const Point2& o, const Point2& a, const Point2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool points_equal(const Point2& a, const Point2& b) {
    return std::abs(a.x - b.x) <= kGeomEps && std::abs(a.y - b.y) <= kGeomEps;
}

std::vector<Point2> dedupe(std::span<const Point2> points) {
    std::vector<Point2> unique(points.begin(), points.end());
    std::sort(unique.begin(), unique.end(), [](const Point2& a, const Point2& b) {
        return a.x != b.x ? a.x < b.x : a.y < b.y;
    });
    unique.erase(std::unique(unique.begin(), unique.end(),
                             [](const Point2& a, const Point2& b) { return points_equal(a, b); }),
                 unique.end());
    return unique;
}

bool all_collinear(const std::vector<Point2>& pts, double eps_area) {
    const Point2& a = pts[0];
    const Point2& b = pts[1];
    for (std::size_t i = 2; i < pts.size(); ++i)
        if (std::abs(cross(a, b, pts[i])) > eps_area) return false;
    return true;
}

bool on_segment(const Point2& p, const Point2& a, const Point2& b) {
    if (std::abs(cross(a, b, p)) > kGeomEps * (std::abs(b.x - a.x) + std::abs(b.y - a.y) + 1.0))
        return false;
    return p.x >= std::min(a.x, b.x) - kGeomEps && p.x <= std::max(a.x, b.x) + kGeomEps &&
           p.y >= std::min(a.y, b.y) - kGeomEps && p.y <= std::max(a.y, b.y) + kGeomEps;
}

// Any contact counts: proper crossings, collinear overlap, endpoint touches.
bool segments_intersect(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
    const double d1 = cross(c, d, a);
    const double d2 = cross(c, d, b);
    const double d3 = cross(a, b, c);
    const double d4 = cross(a, b, d);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
        return true;
    return on_segment(a, c, d) || on_segment(b, c, d) || on_segment(c, a, b) || on_segment(d, a, b);
}

// Clockwise angle of the direction a -> b, measured from the +x axis.
double clockwise_angle(const Point2& a, const Point2& b) {
    const double angle = -std::atan2(b.y - a.y, b.x - a.x);
    return angle < 0.0 ? angle + 2.0 * M_PI : angle;
}

struct WalkPoint {
    Point2 p;
    std::size_t id = 0;
};

// One Moreira-Santos walk at a fixed k. Returns false when the walk jams or
// the resulting polygon fails to enclose every point.
bool attempt_concave_walk(const std::vector<Point2>& points, std::size_t k, Polygon& out) {
    std::vector<WalkPoint> pool;
    pool.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) pool.push_back({points[i], i});

    // Lowest point; rightmost among equals.
    std::size_t first_idx = 0;
    for (std::size_t i = 1; i < pool.size(); ++i) {
        const Point2& p = pool[i].p;
        const Point2& q = pool[first_idx].p;
        if (p.y < q.y || (p.y == q.y && p.x > q.x)) first_idx = i;
    }
    const WalkPoint first = pool[first_idx];
    pool[first_idx] = pool.back();
    pool.pop_back();

    std::vector<WalkPoint> hull{first};
    WalkPoint current = first;
    double prev_angle = 0.0;
    bool closed = false;
    bool first_readded = false;

    std::vector<std::pair<double, std::size_t>> dist;  // (squared distance, pool index)
    while (!pool.empty()) {
        if (hull.size() == 4 && !first_readded) {
            pool.push_back(first);
            first_readded = true;
        }

        dist.clear();
        for (std::size_t i = 0; i < pool.size(); ++i) {
            const double dx = pool[i].p.x - current.p.x;
            const double dy = pool[i].p.y - current.p.y;
            dist.emplace_back(dx * dx + dy * dy, i);
        }
        const std::size_t take = std::min(k, dist.size());
        std::partial_sort(dist.begin(), dist.begin() + take, dist.end(),
                          [&](const auto& a, const auto& b) {
                              return a.first != b.first ? a.first < b.first
                                                        : pool[a.second].id < pool[b.second].id;
                          });

        struct Candidate {
            double angle;
            double distance;
            std::size_t pool_index;
        };
        std::vector<Candidate> candidates;
        candidates.reserve(take);
        for (std::size_t i = 0; i < take; ++i) {
            const WalkPoint& wp = pool[dist[i].second];
            double angle = clockwise_angle(current.p, wp.p) - prev_angle;
            if (angle < 0.0) angle += 2.0 * M_PI;
            candidates.push_back({angle, dist[i].first, dist[i].second});
        }
        std::sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
            if (a.angle != b.angle) return a.angle > b.angle;
            if (a.distance != b.distance) return a.distance < b.distance;
            return pool[a.pool_index].id < pool[b.pool_index].id;
        });

        // First candidate whose segment stays clear of the existing hull.
        // The edge ending at the current point is always skipped; when the
        // candidate closes the polygon the first edge is skipped as well.
        std::size_t chosen_pool_index = pool.size();
        for (const Candidate& c : candidates) {
            const WalkPoint& cand = pool[c.pool_index];
            const bool closes = cand.id == first.id;
            bool hits = false;
            for (std::size_t e = closes ? 1 : 0; e + 2 < hull.size() && !hits; ++e)
                hits = segments_intersect(current.p, cand.p, hull[e].p, hull[e + 1].p);
            if (!hits) {
                chosen_pool_index = c.pool_index;
                break;
            }
        }
        if (chosen_pool_index == pool.size()) return false;  // walk jammed

        const WalkPoint next = pool[chosen_pool_index];
        pool[chosen_pool_index] = pool.back();
        pool.pop_back();
        hull.push_back(next);
        prev_angle = clockwise_angle(next.p, current.p);
        current = next;
        if (current.id == first.id) {
            hull.pop_back();  // drop the duplicated closing vertex
            closed = true;
            break;
        }
    }

    if (hull.size() < 3) return false;
    if (!closed) {
        // The walk ran out of points; accept only if the implicit closing edge
        // keeps the polygon simple.
        for (std::size_t e = 1; e + 2 < hull.size(); ++e)
            if (segments_intersect(hull.back().p, hull.front().p, hull[e].p, hull[e + 1].p)) return false;
    }

    Polygon poly;
    poly.vertices.reserve(hull.size());
    for (const WalkPoint& wp : hull) poly.vertices.push_back(wp.p);

    for (const Point2& p : points)
        if (!polygon_contains(poly, p)) return false;
    out = std::move(poly);
    return true;
}

}  // namespace

Polygon convex_hull(std::span<const Point2> points) {
    std::vector<Point2> pts = dedupe(points);
    if (pts.size() < 3) throw TooFewPoints("convex hull needs >= 3 distinct points");

    std::vector<Point2> hull(2 * pts.size());
    std::size_t n = 0;
    for (const Point2& p : pts) {  // lower chain
        while (n >= 2 && cross(hull[n - 2], hull[n - 1], p) <= 0) --n;
        hull[n++] = p;
    }
    const std::size_t lower = n + 1;
    for (auto it = pts.rbegin() + 1; it != pts.rend(); ++it) {  // upper chain
        while (n >= lower && cross(hull[n - 2], hull[n - 1], *it) <= 0) --n;
        hull[n++] = *it;
    }
    hull.resize(n - 1);
    if (hull.size() < 3) throw CollinearPoints("all points are collinear; no polygon exists");
    Polygon poly;
    poly.vertices = std::move(hull);
    return poly;
}

Polygon concave_hull(std::span<const Point2> points, int k) {
    std::vector<Point2> pts = dedupe(points);
    if (pts.size() < 3)
        throw TooFewPoints("concave hull needs >= 3 distinct points, got " + std::to_string(pts.size()));

    double extent = 1.0;
    for (const Point2& p : pts) extent = std::max({extent, std::abs(p.x), std::abs(p.y)});
    if (all_collinear(pts, kGeomEps * extent * extent))
        throw CollinearPoints("all points are collinear; no polygon exists");

    if (pts.size() == 3) {
        Polygon tri;
        tri.vertices = pts;
        return tri;
    }

    for (std::size_t kk = std::max(k, 3); kk < pts.size(); ++kk) {
        Polygon out;
        if (attempt_concave_walk(pts, kk, out)) return out;
    }
    return convex_hull(pts);
}

BinaryMask rasterize(const Polygon& poly, int width, int height) {
    const std::size_t n = poly.vertices.size();
    if (n < 3) throw DegeneratePolygon("polygon needs >= 3 vertices, got " + std::to_string(n));
    BinaryMask mask(width, height);

    // Even-odd parity fill of strictly interior pixel centers.
    std::vector<double> xs;
    for (int y = 0; y < height; ++y) {
        const double cy = y + 0.5;
        xs.clear();
        for (std::size_t i = 0; i < n; ++i) {
            const Point2& p = poly.vertices[i];
            const Point2& q = poly.vertices[(i + 1) % n];
            if (p.y == q.y) continue;
            const double ymin = std::min(p.y, q.y);
            const double ymax = std::max(p.y, q.y);
            if (cy < ymin || cy >= ymax) continue;
            xs.push_back(p.x + (cy - p.y) * (q.x - p.x) / (q.y - p.y));
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
            const int x_first = static_cast<int>(std::floor(xs[i] - 0.5)) + 1;
            const int x_last = static_cast<int>(std::ceil(xs[i + 1] - 0.5)) - 1;
            for (int x = std::max(x_first, 0); x <= std::min(x_last, width - 1); ++x)
                mask.set(x, y, true);
        }
    }

    // Boundary pass: pixel centers exactly on an edge are inside by rule.
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& p = poly.vertices[i];
        const Point2& q = poly.vertices[(i + 1) % n];
        const int x_lo = std::max(0, static_cast<int>(std::floor(std::min(p.x, q.x) - 0.5)));
        const int x_hi = std::min(width - 1, static_cast<int>(std::ceil(std::max(p.x, q.x) - 0.5)));
        const int y_lo = std::max(0, static_cast<int>(std::floor(std::min(p.y, q.y) - 0.5)));
        const int y_hi = std::min(height - 1, static_cast<int>(std::ceil(std::max(p.y, q.y) - 0.5)));
        for (int y = y_lo; y <= y_hi; ++y)
            for (int x = x_lo; x <= x_hi; ++x)
                if (!mask.test(x, y) && on_segment({x + 0.5, y + 0.5}, p, q)) mask.set(x, y, true);
    }
    return mask;
}

double polygon_area(const Polygon& poly) {
    double twice = 0.0;
    const std::size_t n = poly.vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& p = poly.vertices[i];
        const Point2& q = poly.vertices[(i + 1) % n];
        twice += p.x * q.y - q.x * p.y;
    }
    return std::abs(twice) / 2.0;
}

bool polygon_contains(const Polygon& poly, const Point2& p) {
    const std::size_t n = poly.vertices.size();
    int crossings = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& a = poly.vertices[i];
        const Point2& b = poly.vertices[(i + 1) % n];
        if (on_segment(p, a, b)) return true;
        if (a.y == b.y) continue;
        const double ymin = std::min(a.y, b.y);
        const double ymax = std::max(a.y, b.y);
        if (p.y < ymin || p.y >= ymax) continue;
        const double x_at = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
        if (x_at > p.x) ++crossings;
    }
    return crossings % 2 == 1;
}

}  // namespace panq
