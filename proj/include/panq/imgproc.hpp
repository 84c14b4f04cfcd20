#ifndef PANQ_IMGPROC_HPP
#define PANQ_IMGPROC_HPP

#include <span>
#include <vector>

#include "panq/core.hpp"

namespace panq {

/// Symmetric, normalized 1-D convolution kernel.
struct Kernel1D {
    int radius = 0;
    std::vector<double> weights;  // 2*radius + 1 entries summing to 1
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// Simple (non-self-intersecting) polygon in pixel coordinates.
struct Polygon {
    std::vector<Point2> vertices;
};

/// Gaussian kernel with radius ceil(3*sigma); weights proportional to
/// exp(-k^2 / (2 sigma^2)) and normalized to sum 1.
Kernel1D gaussian_kernel(double sigma);

/// Separable Gaussian blur (horizontal then vertical pass). Borders are
/// extended by reflection including the edge sample (abc|cba).
GrayImage blur(const GrayImage& img, double sigma);

/// Maps an intensity to its 256-bin histogram slot. 8-bit values bin to
/// themselves; 16-bit values are divided into 256 equal ranges.
int intensity_bin(double value, int bitdepth);

/// Otsu's threshold over the 256-bin histogram of the region: the first bin t
/// maximizing the between-class variance w0*w1*(mu0-mu1)^2 of the split
/// [0..t] / (t..255]. Foreground is defined as binned intensity > t.
/// Throws DegenerateRegion when every pixel falls into one bin.
int otsu_threshold(const GrayImage& region);

/// Mask of pixels whose binned intensity exceeds the threshold bin.
BinaryMask threshold_foreground(const GrayImage& region, int threshold_bin);

/// 8-connected components, ordered by descending area; ties broken by the
/// smallest row-major first pixel. Each component mask has the input's size.
std::vector<BinaryMask> connected_components(const BinaryMask& mask);

/// Convex hull (monotone chain), counter-clockwise, collinear points dropped.
Polygon convex_hull(std::span<const Point2> points);

/// k-nearest-neighbours concave hull. Walks the point set from the lowest
/// point, always taking the sharpest available right turn among the k nearest
/// unused points, rejecting self-intersections. If the resulting polygon does
/// not enclose every input point the walk is retried with k+1; once k reaches
/// the point count the convex hull is returned. The result contains all input
/// points, boundary inclusive.
Polygon concave_hull(std::span<const Point2> points, int k = 3);

/// Even-odd scanline fill. A pixel is set iff its center (x+0.5, y+0.5) lies
/// strictly inside the polygon or exactly on its boundary.
BinaryMask rasterize(const Polygon& poly, int width, int height);

/// Shoelace area (absolute value).
double polygon_area(const Polygon& poly);

/// True when the point lies inside the polygon or on its boundary.
bool polygon_contains(const Polygon& poly, const Point2& p);

}  // namespace panq

#endif
