#include "scalign/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace scalign {

namespace {

struct ScreenVertex {
    double x;
    double y;
    double inv_z;
};

// Edge function of a->b evaluated at p; positive on the interior side of a
// triangle with positive area.
double edge(const ScreenVertex& a, const ScreenVertex& b, double px, double py) {
    return (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
}

// Top-left rule in y-down image coordinates for a positive-area triangle.
bool owns_boundary(const ScreenVertex& a, const ScreenVertex& b) {
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    return (dy == 0.0 && dx > 0.0) || dy < 0.0;
}

void raster_triangle(ScreenVertex v0, ScreenVertex v1, ScreenVertex v2, DepthMap& target) {
    double area = edge(v0, v1, v2.x, v2.y);
    if (area == 0.0 || !std::isfinite(area)) {
        return;
    }
    if (area < 0.0) {
        std::swap(v1, v2);
        area = -area;
    }
    const double min_x = std::min({v0.x, v1.x, v2.x});
    const double max_x = std::max({v0.x, v1.x, v2.x});
    const double min_y = std::min({v0.y, v1.y, v2.y});
    const double max_y = std::max({v0.y, v1.y, v2.y});
    const int x0 = static_cast<int>(std::max(0.0, std::ceil(min_x)));
    const int x1 = static_cast<int>(std::min(static_cast<double>(target.width() - 1), std::floor(max_x)));
    const int y0 = static_cast<int>(std::max(0.0, std::ceil(min_y)));
    const int y1 = static_cast<int>(std::min(static_cast<double>(target.height() - 1), std::floor(max_y)));
    if (x0 > x1 || y0 > y1) {
        return;
    }
    const bool own12 = owns_boundary(v1, v2);
    const bool own20 = owns_boundary(v2, v0);
    const bool own01 = owns_boundary(v0, v1);
    const auto inside = [](double e, bool own) { return e > 0.0 || (e == 0.0 && own); };

    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const double e0 = edge(v1, v2, x, y);
            const double e1 = edge(v2, v0, x, y);
            const double e2 = edge(v0, v1, x, y);
            if (!inside(e0, own12) || !inside(e1, own20) || !inside(e2, own01)) {
                continue;
            }
            const double inv_z = (e0 * v0.inv_z + e1 * v1.inv_z + e2 * v2.inv_z) / area;
            if (!(inv_z > 0.0)) {
                continue;
            }
            const double z = 1.0 / inv_z;
            double& dst = target.at(x, y);
            if (dst == 0.0 || z < dst) {
                dst = z;
            }
        }
    }
}

} // namespace

DepthMap render_depth(const TriangleMesh& mesh, const Pose& pose, const Intrinsics& k) {
    DepthMap target(k.width, k.height, 0.0);
    const Mat3 rt = pose.rotation().transpose();
    std::vector<Vec3> cam(mesh.vertices.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        cam[i] = rt * (mesh.vertices[i] - pose.translation());
    }
    const auto to_screen = [&](const Vec3& p) {
        return ScreenVertex{k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy, 1.0 / p.z()};
    };

    for (const Face& f : mesh.faces) {
        const std::array<Vec3, 3> tri{cam[f[0]], cam[f[1]], cam[f[2]]};
        const bool all_front = tri[0].z() >= kNearPlane && tri[1].z() >= kNearPlane && tri[2].z() >= kNearPlane;
        if (all_front) {
            raster_triangle(to_screen(tri[0]), to_screen(tri[1]), to_screen(tri[2]), target);
            continue;
        }
        // Sutherland-Hodgman against z = near; at most four vertices survive.
        std::array<Vec3, 4> poly{};
        int n = 0;
        for (int i = 0; i < 3; ++i) {
            const Vec3& a = tri[i];
            const Vec3& b = tri[(i + 1) % 3];
            const bool a_in = a.z() >= kNearPlane;
            const bool b_in = b.z() >= kNearPlane;
            if (a_in) {
                poly[n++] = a;
            }
            if (a_in != b_in) {
                const double t = (kNearPlane - a.z()) / (b.z() - a.z());
                Vec3 p = a + t * (b - a);
                p.z() = kNearPlane;
                poly[n++] = p;
            }
        }
        for (int i = 1; i + 1 < n; ++i) {
            raster_triangle(to_screen(poly[0]), to_screen(poly[i]), to_screen(poly[i + 1]), target);
        }
    }
    return target;
}

} // namespace scalign
