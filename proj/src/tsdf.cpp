#include "scalign/tsdf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "scalign/parallel.hpp"
#include "scalign/simd/kernels.hpp"

namespace scalign {

TsdfVolume::TsdfVolume(const Vec3& origin, double voxel_size, std::array<int, 3> dims, double truncation,
                       float weight_cap)
    : origin_(origin), voxel_size_(voxel_size), dims_(dims), truncation_(truncation), weight_cap_(weight_cap) {
    if (!(voxel_size > 0.0) || !std::isfinite(voxel_size)) {
        throw InputError("tsdf: voxel size must be positive");
    }
    if (!(truncation >= voxel_size)) {
        throw InputError("tsdf: truncation must be at least one voxel");
    }
    if (dims[0] <= 0 || dims[1] <= 0 || dims[2] <= 0) {
        throw InputError("tsdf: dimensions must be positive");
    }
    if (!(weight_cap >= 1.0f)) {
        throw InputError("tsdf: weight cap must be at least 1");
    }
    const double count = static_cast<double>(dims[0]) * dims[1] * dims[2];
    if (count > 1.0e9) {
        throw InputError("tsdf: volume too large");
    }
    tsdf_.assign(static_cast<std::size_t>(count), 1.0f);
    weight_.assign(static_cast<std::size_t>(count), 0.0f);
}

void TsdfVolume::set(int x, int y, int z, float tsdf, float weight) {
    const std::size_t i = index(x, y, z);
    tsdf_[i] = std::clamp(tsdf, -1.0f, 1.0f);
    weight_[i] = std::max(weight, 0.0f);
}

std::size_t TsdfVolume::observed_count() const {
    return static_cast<std::size_t>(std::count_if(weight_.begin(), weight_.end(), [](float w) { return w > 0.0f; }));
}

void integrate(TsdfVolume& volume, const DepthMap& depth, const Pose& pose, const Intrinsics& k,
               const DepthValidityRange& range) {
    if (depth.width() != k.width || depth.height() != k.height) {
        throw InputError("integrate: depth map size does not match intrinsics");
    }
    const simd::Kernels& kernels = simd::active();
    const auto [nx, ny, nz] = volume.dims();
    const Mat3 rt = pose.rotation().transpose();
    const Vec3 step = rt * Vec3(volume.voxel_size(), 0.0, 0.0);

    simd::TsdfRowArgs base{};
    base.cam_step[0] = step.x();
    base.cam_step[1] = step.y();
    base.cam_step[2] = step.z();
    base.fx = k.fx;
    base.fy = k.fy;
    base.cx = k.cx;
    base.cy = k.cy;
    base.width = k.width;
    base.height = k.height;
    base.depth = depth.values().data();
    base.epsilon = range.epsilon;
    base.d_max = range.d_max;
    base.truncation = volume.truncation();
    base.weight_cap = volume.weight_cap();

    float* tsdf = volume.tsdf_values().data();
    float* weight = volume.weight_values().data();
    parallel_for(0, static_cast<std::size_t>(nz), [&](std::size_t zi) {
        const int z = static_cast<int>(zi);
        simd::TsdfRowArgs args = base;
        for (int y = 0; y < ny; ++y) {
            const Vec3 cam = rt * (volume.voxel_center(0, y, z) - pose.translation());
            args.cam_origin[0] = cam.x();
            args.cam_origin[1] = cam.y();
            args.cam_origin[2] = cam.z();
            const std::size_t row = volume.index(0, y, z);
            kernels.integrate_tsdf_row(args, tsdf + row, weight + row, static_cast<std::size_t>(nx));
        }
    });
}

TsdfVolume make_volume_for(std::span<const DepthMap> depths, std::span<const Pose> poses, const Intrinsics& k,
                           const DepthValidityRange& range, double voxel_size, double truncation) {
    if (depths.size() != poses.size()) {
        throw InputError("make_volume_for: one pose per depth map required");
    }
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    bool any = false;
    for (std::size_t f = 0; f < depths.size(); ++f) {
        const DepthMap& d = depths[f];
        for (int y = 0; y < d.height(); ++y) {
            for (int x = 0; x < d.width(); ++x) {
                const double z = d.at(x, y);
                if (!range.contains(z)) {
                    continue;
                }
                const Vec3 p = backproject(Vec2(x, y), z, poses[f], k);
                lo = lo.cwiseMin(p);
                hi = hi.cwiseMax(p);
                any = true;
            }
        }
    }
    if (!any) {
        throw EmptyVolume("no valid depth sample to fuse");
    }
    const Vec3 origin = lo - Vec3::Constant(truncation);
    const Vec3 extent = (hi - lo) + Vec3::Constant(2.0 * truncation);
    std::array<int, 3> dims{};
    for (int a = 0; a < 3; ++a) {
        dims[a] = static_cast<int>(std::ceil(extent[a] / voxel_size)) + 1;
    }
    return TsdfVolume(origin, voxel_size, dims, truncation);
}

namespace mc {

const std::array<std::array<int, 3>, 8> kCornerOffsets{{
    {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1},
}};

const std::array<std::array<int, 2>, 12> kEdgeCorners{{
    {0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6}, {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7},
}};

namespace {

int edge_between(int a, int b) {
    for (int e = 0; e < 12; ++e) {
        const auto [c0, c1] = kEdgeCorners[e];
        if ((c0 == a && c1 == b) || (c0 == b && c1 == a)) {
            return e;
        }
    }
    return -1;
}

// Faces as corner cycles, each oriented counter-clockwise seen from outside.
std::array<std::array<int, 4>, 6> oriented_faces() {
    std::array<std::array<int, 4>, 6> faces{{
        {0, 1, 2, 3}, {4, 5, 6, 7}, {0, 1, 5, 4}, {3, 2, 6, 7}, {0, 3, 7, 4}, {1, 2, 6, 5},
    }};
    const auto pos = [](int c) { return Vec3(kCornerOffsets[c][0], kCornerOffsets[c][1], kCornerOffsets[c][2]); };
    for (auto& f : faces) {
        const Vec3 center = 0.25 * (pos(f[0]) + pos(f[1]) + pos(f[2]) + pos(f[3]));
        const Vec3 outward = center - Vec3(0.5, 0.5, 0.5);
        const Vec3 normal = (pos(f[1]) - pos(f[0])).cross(pos(f[2]) - pos(f[1]));
        if (normal.dot(outward) < 0.0) {
            std::reverse(f.begin(), f.end());
        }
    }
    return faces;
}

CaseTriangles triangulate_case(int mask, const std::array<std::array<int, 4>, 6>& faces) {
    const auto inside = [mask](int c) { return ((mask >> c) & 1) != 0; };
    // next[e]: the segment on some face that starts at crossing edge e.
    std::array<int, 12> next;
    next.fill(-1);
    for (const auto& f : faces) {
        for (int k = 0; k < 4; ++k) {
            // Enter the negative region across edge (f[k], f[k+1]) ...
            if (inside(f[k]) || !inside(f[(k + 1) % 4])) {
                continue;
            }
            // ... and leave it at the first in->out edge further along.
            for (int j = 1; j < 4; ++j) {
                const int a = f[(k + j) % 4];
                const int b = f[(k + j + 1) % 4];
                if (inside(a) && !inside(b)) {
                    next[edge_between(f[k], f[(k + 1) % 4])] = edge_between(a, b);
                    break;
                }
            }
        }
    }

    CaseTriangles out;
    out.fill(-1);
    std::size_t n = 0;
    std::array<bool, 12> used{};
    for (int start = 0; start < 12; ++start) {
        if (next[start] < 0 || used[start]) {
            continue;
        }
        std::vector<int> loop;
        for (int e = start; !used[e]; e = next[e]) {
            used[e] = true;
            loop.push_back(e);
        }
        for (std::size_t t = 1; t + 1 < loop.size(); ++t) {
            out[n++] = loop[0];
            out[n++] = loop[t];
            out[n++] = loop[t + 1];
        }
    }
    return out;
}

} // namespace

const std::array<CaseTriangles, 256>& triangle_table() {
    static const std::array<CaseTriangles, 256> table = [] {
        const auto faces = oriented_faces();
        std::array<CaseTriangles, 256> t{};
        for (int mask = 0; mask < 256; ++mask) {
            t[mask] = triangulate_case(mask, faces);
        }
        return t;
    }();
    return table;
}

} // namespace mc

namespace {

struct SlabOutput {
    // Triangles as global edge ids, three per triangle.
    std::vector<std::uint64_t> corners;
    std::unordered_map<std::uint64_t, Vec3> positions;
};

} // namespace

TriangleMesh extract_mesh(const TsdfVolume& volume) {
    const auto [nx, ny, nz] = volume.dims();
    const auto& table = mc::triangle_table();
    if (nx < 2 || ny < 2 || nz < 2) {
        return {};
    }

    // Edge id: 3 * (linear index of the edge's lower corner) + axis.
    const auto edge_id = [&](int x, int y, int z, int e) {
        const auto [c0, c1] = mc::kEdgeCorners[e];
        const auto& o0 = mc::kCornerOffsets[c0];
        const auto& o1 = mc::kCornerOffsets[c1];
        int axis = 0;
        while (o0[axis] == o1[axis]) {
            ++axis;
        }
        const int bx = x + std::min(o0[0], o1[0]);
        const int by = y + std::min(o0[1], o1[1]);
        const int bz = z + std::min(o0[2], o1[2]);
        return static_cast<std::uint64_t>(volume.index(bx, by, bz)) * 3u + static_cast<std::uint64_t>(axis);
    };

    std::vector<SlabOutput> slabs(static_cast<std::size_t>(nz - 1));
    parallel_for(0, slabs.size(), [&](std::size_t zi) {
        const int z = static_cast<int>(zi);
        SlabOutput& out = slabs[zi];
        std::array<float, 8> val{};
        for (int y = 0; y + 1 < ny; ++y) {
            for (int x = 0; x + 1 < nx; ++x) {
                int mask = 0;
                bool observed = true;
                for (int c = 0; c < 8 && observed; ++c) {
                    const auto& o = mc::kCornerOffsets[c];
                    const std::size_t i = volume.index(x + o[0], y + o[1], z + o[2]);
                    observed = volume.weight_values()[i] > 0.0f;
                    val[c] = volume.tsdf_values()[i];
                    if (val[c] < 0.0f) {
                        mask |= 1 << c;
                    }
                }
                if (!observed || mask == 0 || mask == 255) {
                    continue;
                }
                const auto& tris = table[mask];
                for (int t = 0; t < 32 && tris[t] >= 0; ++t) {
                    const int e = tris[t];
                    const std::uint64_t id = edge_id(x, y, z, e);
                    out.corners.push_back(id);
                    if (out.positions.count(id) != 0) {
                        continue;
                    }
                    // Interpolate from the lower corner so shared edges agree.
                    auto [c0, c1] = mc::kEdgeCorners[e];
                    const auto& o0 = mc::kCornerOffsets[c0];
                    const auto& o1 = mc::kCornerOffsets[c1];
                    if (o0[0] + o0[1] + o0[2] > o1[0] + o1[1] + o1[2]) {
                        std::swap(c0, c1);
                    }
                    const auto& a = mc::kCornerOffsets[c0];
                    const auto& b = mc::kCornerOffsets[c1];
                    const double va = val[c0];
                    const double vb = val[c1];
                    const double s = va / (va - vb);
                    const Vec3 pa = volume.voxel_center(x + a[0], y + a[1], z + a[2]);
                    const Vec3 pb = volume.voxel_center(x + b[0], y + b[1], z + b[2]);
                    out.positions.emplace(id, pa + s * (pb - pa));
                }
            }
        }
    });

    TriangleMesh mesh;
    std::unordered_map<std::uint64_t, std::uint32_t> vertex_of;
    for (SlabOutput& slab : slabs) {
        for (std::size_t t = 0; t + 2 < slab.corners.size(); t += 3) {
            Face f{};
            for (int c = 0; c < 3; ++c) {
                const std::uint64_t id = slab.corners[t + c];
                auto [it, inserted] = vertex_of.try_emplace(id, static_cast<std::uint32_t>(mesh.vertices.size()));
                if (inserted) {
                    mesh.vertices.push_back(slab.positions.at(id));
                }
                f[c] = it->second;
            }
            mesh.faces.push_back(f);
        }
    }
    return mesh;
}

} // namespace scalign
