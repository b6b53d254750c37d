#include "scalign/io.hpp"

#include <png.h>

#include <bit>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

namespace scalign::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw InputError("write failed: " + path.string());
    }
}

namespace {

std::string fmt(const char* format, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), format, args...);
    return buf;
}

// Non-comment, non-blank lines with their 1-based line numbers.
std::vector<std::pair<int, std::string>> content_lines(const std::string& text) {
    std::vector<std::pair<int, std::string>> out;
    std::istringstream in(text);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') {
            continue;
        }
        out.emplace_back(n, line);
    }
    return out;
}

[[noreturn]] void parse_error(const fs::path& path, int line, const std::string& what) {
    throw InputError(path.string() + ":" + std::to_string(line) + ": " + what);
}

template <typename T>
void read_binary(std::istream& in, T& value, const fs::path& path) {
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) {
        throw InputError("truncated file: " + path.string());
    }
}

template <typename T>
void write_binary(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

} // namespace

// ---- trajectories -------------------------------------------------------

std::vector<StampedPose> read_tum(const fs::path& path) {
    std::vector<StampedPose> out;
    for (const auto& [n, line] : content_lines(read_text(path))) {
        std::istringstream ls(line);
        double v[8];
        for (double& x : v) {
            if (!(ls >> x)) {
                parse_error(path, n, "expected `timestamp tx ty tz qx qy qz qw`");
            }
        }
        try {
            out.push_back({v[0], Pose::from_quaternion(Vec3(v[1], v[2], v[3]), v[4], v[5], v[6], v[7])});
        } catch (const InputError& e) {
            parse_error(path, n, e.what());
        }
    }
    if (out.empty()) {
        throw InputError(path.string() + ": no poses");
    }
    return out;
}

void write_tum(const fs::path& path, const std::vector<StampedPose>& poses) {
    std::string text = "# timestamp tx ty tz qx qy qz qw\n";
    for (const StampedPose& p : poses) {
        const Vec3& t = p.pose.translation();
        const Eigen::Vector4d q = p.pose.quaternion_xyzw();
        text += fmt("%.6f %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n", p.timestamp, t.x(), t.y(), t.z(), q[0], q[1],
                    q[2], q[3]);
    }
    write_text(path, text);
}

// ---- intrinsics ---------------------------------------------------------

Intrinsics read_intrinsics(const fs::path& path) {
    std::istringstream in(read_text(path));
    Intrinsics k;
    double w = 0.0;
    double h = 0.0;
    if (!(in >> k.fx >> k.fy >> k.cx >> k.cy >> w >> h)) {
        throw InputError(path.string() + ": expected `fx fy cx cy` and `width height`");
    }
    if (w != std::floor(w) || h != std::floor(h) || w > 1e6 || h > 1e6) {
        throw InputError(path.string() + ": image size must be integral");
    }
    k.width = static_cast<int>(w);
    k.height = static_cast<int>(h);
    k.validate();
    return k;
}

void write_intrinsics(const fs::path& path, const Intrinsics& k) {
    write_text(path, fmt("%.17g %.17g %.17g %.17g\n%d %d\n", k.fx, k.fy, k.cx, k.cy, k.width, k.height));
}

// ---- depth maps ---------------------------------------------------------

DepthMap read_depth(const fs::path& path) {
    const std::string ext = path.extension().string();
    if (ext == ".png") {
        return read_depth_png(path);
    }
    if (ext == ".dpth") {
        return read_depth_raw(path);
    }
    throw InputError("unknown depth format (expected .png or .dpth): " + path.string());
}

void write_depth(const fs::path& path, const DepthMap& depth) {
    const std::string ext = path.extension().string();
    if (ext == ".png") {
        write_depth_png(path, depth);
    } else if (ext == ".dpth") {
        write_depth_raw(path, depth);
    } else {
        throw InputError("unknown depth format (expected .png or .dpth): " + path.string());
    }
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) {
        throw InputError("cannot open " + path.string() + ": " + std::strerror(errno));
    }
    return f;
}

[[noreturn]] void png_fail(png_structp, png_const_charp msg) {
    throw InputError(std::string("png: ") + msg);
}

void png_warn(png_structp, png_const_charp) {}

} // namespace

DepthMap read_depth_png(const fs::path& path) {
    FilePtr file = open_file(path, "rb");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (info == nullptr) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw InputError("png: allocation failed");
    }
    struct Guard {
        png_structp* png;
        png_infop* info;
        ~Guard() { png_destroy_read_struct(png, info, nullptr); }
    } guard{&png, &info};

    png_init_io(png, file.get());
    png_read_info(png, info);
    const auto width = png_get_image_width(png, info);
    const auto height = png_get_image_height(png, info);
    if (png_get_bit_depth(png, info) != 16 || png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY) {
        throw InputError(path.string() + ": depth PNG must be 16-bit grayscale");
    }
    std::vector<png_byte> row(png_get_rowbytes(png, info));
    DepthMap depth(static_cast<int>(width), static_cast<int>(height));
    for (png_uint_32 y = 0; y < height; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (png_uint_32 x = 0; x < width; ++x) {
            const unsigned mm = (static_cast<unsigned>(row[2 * x]) << 8) | row[2 * x + 1];
            depth.at(static_cast<int>(x), static_cast<int>(y)) = mm == 0 ? 0.0 : mm / 1000.0;
        }
    }
    png_read_end(png, nullptr);
    return depth;
}

void write_depth_png(const fs::path& path, const DepthMap& depth) {
    FilePtr file = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (info == nullptr) {
        png_destroy_write_struct(&png, nullptr);
        throw InputError("png: allocation failed");
    }
    struct Guard {
        png_structp* png;
        png_infop* info;
        ~Guard() { png_destroy_write_struct(png, info); }
    } guard{&png, &info};

    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(depth.width()), static_cast<png_uint_32>(depth.height()), 16,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_byte> row(2 * static_cast<std::size_t>(depth.width()));
    for (int y = 0; y < depth.height(); ++y) {
        for (int x = 0; x < depth.width(); ++x) {
            const double d = depth.at(x, y);
            unsigned mm = 0;
            if (DepthMap::is_valid(d)) {
                mm = static_cast<unsigned>(std::clamp(std::lround(d * 1000.0), 1L, 65535L));
            }
            row[2 * x] = static_cast<png_byte>(mm >> 8);
            row[2 * x + 1] = static_cast<png_byte>(mm & 0xff);
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
}

DepthMap read_depth_raw(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open " + path.string());
    }
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "DPTH", 4) != 0) {
        throw InputError(path.string() + ": missing DPTH header");
    }
    std::uint32_t w = 0, h = 0, reserved = 0;
    read_binary(in, w, path);
    read_binary(in, h, path);
    read_binary(in, reserved, path);
    if (w > 100000 || h > 100000) {
        throw InputError(path.string() + ": implausible depth map size");
    }
    std::vector<float> raw(static_cast<std::size_t>(w) * h);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(float)));
    if (!in) {
        throw InputError("truncated file: " + path.string());
    }
    std::vector<double> values(raw.begin(), raw.end());
    return {static_cast<int>(w), static_cast<int>(h), std::move(values)};
}

void write_depth_raw(const fs::path& path, const DepthMap& depth) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    out.write("DPTH", 4);
    write_binary(out, static_cast<std::uint32_t>(depth.width()));
    write_binary(out, static_cast<std::uint32_t>(depth.height()));
    write_binary(out, std::uint32_t{0});
    std::vector<float> raw(depth.values().begin(), depth.values().end());
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(float)));
    if (!out) {
        throw InputError("write failed: " + path.string());
    }
}

// ---- correspondences ----------------------------------------------------

std::vector<Correspondence> read_correspondences(const fs::path& path) {
    std::vector<Correspondence> out;
    for (const auto& [n, line] : content_lines(read_text(path))) {
        std::istringstream ls(line);
        long long a = -1, b = -1;
        Correspondence c;
        if (!(ls >> a >> b >> c.pixel_a.x() >> c.pixel_a.y() >> c.pixel_b.x() >> c.pixel_b.y())) {
            parse_error(path, n, "expected `frame_a frame_b ua va ub vb`");
        }
        if (a < 0 || b < 0 || a == b) {
            parse_error(path, n, "frames must be distinct non-negative indices");
        }
        c.frame_a = static_cast<std::size_t>(a);
        c.frame_b = static_cast<std::size_t>(b);
        out.push_back(c);
    }
    return out;
}

void write_correspondences(const fs::path& path, const std::vector<Correspondence>& corrs) {
    std::string text;
    text.reserve(corrs.size() * 48);
    for (const Correspondence& c : corrs) {
        text += fmt("%zu %zu %.6f %.6f %.6f %.6f\n", c.frame_a, c.frame_b, c.pixel_a.x(), c.pixel_a.y(),
                    c.pixel_b.x(), c.pixel_b.y());
    }
    write_text(path, text);
}

// ---- meshes -------------------------------------------------------------

namespace {

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::optional<PlyType> ply_type(const std::string& name) {
    if (name == "char" || name == "int8") return PlyType::Int8;
    if (name == "uchar" || name == "uint8") return PlyType::UInt8;
    if (name == "short" || name == "int16") return PlyType::Int16;
    if (name == "ushort" || name == "uint16") return PlyType::UInt16;
    if (name == "int" || name == "int32") return PlyType::Int32;
    if (name == "uint" || name == "uint32") return PlyType::UInt32;
    if (name == "float" || name == "float32") return PlyType::Float32;
    if (name == "double" || name == "float64") return PlyType::Float64;
    return std::nullopt;
}

double read_ply_value(std::istream& in, PlyType type, const fs::path& path) {
    switch (type) {
    case PlyType::Int8: { std::int8_t v; read_binary(in, v, path); return v; }
    case PlyType::UInt8: { std::uint8_t v; read_binary(in, v, path); return v; }
    case PlyType::Int16: { std::int16_t v; read_binary(in, v, path); return v; }
    case PlyType::UInt16: { std::uint16_t v; read_binary(in, v, path); return v; }
    case PlyType::Int32: { std::int32_t v; read_binary(in, v, path); return v; }
    case PlyType::UInt32: { std::uint32_t v; read_binary(in, v, path); return v; }
    case PlyType::Float32: { float v; read_binary(in, v, path); return v; }
    case PlyType::Float64: { double v; read_binary(in, v, path); return v; }
    }
    return 0.0;
}

struct PlyProperty {
    std::string name;
    PlyType type = PlyType::Float32;
    bool is_list = false;
    PlyType count_type = PlyType::UInt8;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> properties;
};

} // namespace

TriangleMesh read_ply(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open " + path.string());
    }
    std::string line;
    std::getline(in, line);
    if (line != "ply" && line != "ply\r") {
        throw InputError(path.string() + ": not a PLY file");
    }
    std::vector<PlyElement> elements;
    bool binary_le = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "end_header") {
            break;
        }
        if (word == "format") {
            std::string fmt_name;
            ls >> fmt_name;
            binary_le = fmt_name == "binary_little_endian";
        } else if (word == "element") {
            PlyElement e;
            ls >> e.name >> e.count;
            elements.push_back(e);
        } else if (word == "property") {
            if (elements.empty()) {
                throw InputError(path.string() + ": property before element");
            }
            PlyProperty p;
            std::string type;
            ls >> type;
            if (type == "list") {
                std::string count_type, item_type;
                ls >> count_type >> item_type >> p.name;
                const auto ct = ply_type(count_type);
                const auto it = ply_type(item_type);
                if (!ct || !it) {
                    throw InputError(path.string() + ": unsupported list type");
                }
                p.is_list = true;
                p.count_type = *ct;
                p.type = *it;
            } else {
                ls >> p.name;
                const auto t = ply_type(type);
                if (!t) {
                    throw InputError(path.string() + ": unsupported property type " + type);
                }
                p.type = *t;
            }
            elements.back().properties.push_back(p);
        }
    }
    if (!binary_le) {
        throw InputError(path.string() + ": only binary_little_endian PLY is supported");
    }

    TriangleMesh mesh;
    for (const PlyElement& e : elements) {
        if (e.name == "vertex") {
            mesh.vertices.reserve(e.count);
            for (std::size_t i = 0; i < e.count; ++i) {
                Vec3 v = Vec3::Zero();
                for (const PlyProperty& p : e.properties) {
                    if (p.is_list) {
                        throw InputError(path.string() + ": list property on vertices");
                    }
                    const double value = read_ply_value(in, p.type, path);
                    if (p.name == "x") v.x() = value;
                    else if (p.name == "y") v.y() = value;
                    else if (p.name == "z") v.z() = value;
                }
                mesh.vertices.push_back(v);
            }
        } else {
            const bool is_face = e.name == "face";
            for (std::size_t i = 0; i < e.count; ++i) {
                for (const PlyProperty& p : e.properties) {
                    if (!p.is_list) {
                        read_ply_value(in, p.type, path);
                        continue;
                    }
                    const auto n = static_cast<std::size_t>(read_ply_value(in, p.count_type, path));
                    std::vector<std::uint32_t> idx(n);
                    for (auto& v : idx) {
                        v = static_cast<std::uint32_t>(read_ply_value(in, p.type, path));
                    }
                    if (is_face && (p.name == "vertex_indices" || p.name == "vertex_index")) {
                        // Polygons are fanned into triangles.
                        for (std::size_t t = 1; t + 1 < n; ++t) {
                            mesh.faces.push_back({idx[0], idx[t], idx[t + 1]});
                        }
                    }
                }
            }
        }
    }
    mesh.validate();
    return mesh;
}

void write_ply(const fs::path& path, const TriangleMesh& mesh) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    out << "ply\nformat binary_little_endian 1.0\n"
        << "element vertex " << mesh.vertices.size() << "\n"
        << "property float x\nproperty float y\nproperty float z\n"
        << "element face " << mesh.faces.size() << "\n"
        << "property list uchar int vertex_indices\nend_header\n";
    for (const Vec3& v : mesh.vertices) {
        write_binary(out, static_cast<float>(v.x()));
        write_binary(out, static_cast<float>(v.y()));
        write_binary(out, static_cast<float>(v.z()));
    }
    for (const Face& f : mesh.faces) {
        write_binary(out, std::uint8_t{3});
        for (std::uint32_t i : f) {
            write_binary(out, static_cast<std::int32_t>(i));
        }
    }
    if (!out) {
        throw InputError("write failed: " + path.string());
    }
}

// ---- volume dump --------------------------------------------------------

void write_volume_grid(const fs::path& path, const TsdfVolume& volume, bool weights) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    const auto& d = volume.dims();
    const Vec3& o = volume.origin();
    out << fmt("%d %d %d %.17g %.17g %.17g %.17g\n", d[0], d[1], d[2], volume.voxel_size(), o.x(), o.y(), o.z());
    const auto values = weights ? volume.weight_values() : volume.tsdf_values();
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(float)));
    if (!out) {
        throw InputError("write failed: " + path.string());
    }
}

namespace {

struct GridDump {
    std::array<int, 3> dims{};
    double voxel_size = 0.0;
    Vec3 origin = Vec3::Zero();
    std::vector<float> values;
};

GridDump read_grid(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open " + path.string());
    }
    std::string header;
    std::getline(in, header);
    std::istringstream hs(header);
    GridDump g;
    if (!(hs >> g.dims[0] >> g.dims[1] >> g.dims[2] >> g.voxel_size >> g.origin.x() >> g.origin.y() >> g.origin.z())) {
        throw InputError(path.string() + ": bad volume header");
    }
    if (g.dims[0] <= 0 || g.dims[1] <= 0 || g.dims[2] <= 0) {
        throw InputError(path.string() + ": bad volume dimensions");
    }
    g.values.resize(static_cast<std::size_t>(g.dims[0]) * g.dims[1] * g.dims[2]);
    in.read(reinterpret_cast<char*>(g.values.data()), static_cast<std::streamsize>(g.values.size() * sizeof(float)));
    if (!in) {
        throw InputError("truncated file: " + path.string());
    }
    return g;
}

} // namespace

TsdfVolume read_volume(const fs::path& tsdf_path, const fs::path& weight_path, double truncation) {
    const GridDump t = read_grid(tsdf_path);
    const GridDump w = read_grid(weight_path);
    if (t.dims != w.dims || t.voxel_size != w.voxel_size || t.origin != w.origin) {
        throw InputError("tsdf and weight dumps describe different grids");
    }
    TsdfVolume volume(t.origin, t.voxel_size, t.dims, std::max(truncation, t.voxel_size));
    std::copy(t.values.begin(), t.values.end(), volume.tsdf_values().begin());
    std::copy(w.values.begin(), w.values.end(), volume.weight_values().begin());
    return volume;
}

// ---- scene manifest -----------------------------------------------------

SceneBundle read_scene(const fs::path& path) {
    const fs::path dir = path.parent_path();
    const auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : dir / p; };
    SceneBundle b;
    for (const auto& [n, line] : content_lines(read_text(path))) {
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        std::string p;
        long long frame = -1, submap = -1;
        if (key == "intrinsics" && ls >> p) {
            b.intrinsics = resolve(p);
        } else if (key == "poses" && ls >> p) {
            b.poses = resolve(p);
        } else if (key == "depth" && ls >> frame >> p && frame >= 0) {
            b.depth[static_cast<std::size_t>(frame)] = resolve(p);
        } else if (key == "submap_depth" && ls >> submap >> frame >> p && submap >= 0 && frame >= 0) {
            b.submap_depth[{static_cast<std::size_t>(submap), static_cast<std::size_t>(frame)}] = resolve(p);
        } else if (key == "gt_depth" && ls >> frame >> p && frame >= 0) {
            b.gt_depth[static_cast<std::size_t>(frame)] = resolve(p);
        } else if (key == "correspondences" && ls >> p) {
            b.correspondences = resolve(p);
        } else if (key == "gt_mesh" && ls >> p) {
            b.gt_mesh = resolve(p);
        } else {
            parse_error(path, n, "unrecognized manifest entry");
        }
    }
    if (b.intrinsics.empty() || b.poses.empty()) {
        throw InputError(path.string() + ": manifest needs `intrinsics` and `poses`");
    }
    return b;
}

void write_scene(const fs::path& path, const SceneBundle& b) {
    const fs::path dir = path.parent_path();
    const auto rel = [&](const fs::path& p) {
        std::error_code ec;
        const fs::path r = fs::relative(p, dir.empty() ? fs::path(".") : dir, ec);
        return (ec || r.empty() ? p : r).generic_string();
    };
    std::string text;
    text += "intrinsics " + rel(b.intrinsics) + "\n";
    text += "poses " + rel(b.poses) + "\n";
    if (b.correspondences) {
        text += "correspondences " + rel(*b.correspondences) + "\n";
    }
    if (b.gt_mesh) {
        text += "gt_mesh " + rel(*b.gt_mesh) + "\n";
    }
    for (const auto& [frame, p] : b.depth) {
        text += "depth " + std::to_string(frame) + " " + rel(p) + "\n";
    }
    for (const auto& [key, p] : b.submap_depth) {
        text += "submap_depth " + std::to_string(key.first) + " " + std::to_string(key.second) + " " + rel(p) + "\n";
    }
    for (const auto& [frame, p] : b.gt_depth) {
        text += "gt_depth " + std::to_string(frame) + " " + rel(p) + "\n";
    }
    write_text(path, text);
}

} // namespace scalign::io
