#pragma once

// Binary trace files ("MSWL1").
//
// Layout (all little-endian, 72-byte header):
//   0  char[8]  magic "MSWL1" padded with NUL
//   8  u32      format version (1)
//  12  u32      parity code (0 none, 1 odd, 2 even)
//  16  u64      nx (nodes per level)
//  24  u64      nt_stored
//  32  u64      stride
//  40  f64      dx
//  48  f64      dt
//  56  f64      t_start
//  64  f64      c (NaN for derived fields)
//  72  f64[nt_stored * nx] samples, t-major
//
// The domain is symmetric, so x_min = -nx dx / 2. Provenance lives in a JSON
// sidecar next to the file (<path>.json).

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "trace.hpp"

namespace mswave {

inline constexpr std::uint32_t trace_format_version = 1;
inline constexpr std::size_t trace_header_bytes = 72;

namespace detail {

template <class T>
void put_le(std::string& buf, T value) {
    std::array<unsigned char, sizeof(T)> raw{};
    std::memcpy(raw.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
    buf.append(reinterpret_cast<const char*>(raw.data()), raw.size());
}

template <class T>
T get_le(const char* p) {
    std::array<unsigned char, sizeof(T)> raw{};
    std::memcpy(raw.data(), p, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
    T value;
    std::memcpy(&value, raw.data(), sizeof(T));
    return value;
}

}  // namespace detail

inline std::string encode_trace_header(const SpaceTimeTrace& tr) {
    std::string h;
    h.append("MSWL1\0\0\0", 8);
    detail::put_le<std::uint32_t>(h, trace_format_version);
    detail::put_le<std::uint32_t>(h, static_cast<std::uint32_t>(tr.parity));
    detail::put_le<std::uint64_t>(h, tr.nx());
    detail::put_le<std::uint64_t>(h, tr.nt_stored);
    detail::put_le<std::uint64_t>(h, tr.stride);
    detail::put_le<double>(h, tr.grid.dx);
    detail::put_le<double>(h, tr.grid.dt);
    detail::put_le<double>(h, tr.grid.t_start);
    detail::put_le<double>(h, tr.c);
    return h;
}

inline void write_trace(const std::filesystem::path& path, const SpaceTimeTrace& tr,
                        const nlohmann::json& provenance = nlohmann::json::object()) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    const std::string header = encode_trace_header(tr);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    std::string body;
    body.reserve(tr.samples.size() * 8);
    for (double v : tr.samples) detail::put_le<double>(body, v);
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) throw Error("write failed: " + path.string());

    nlohmann::json side = provenance;
    side["format"] = "MSWL1";
    side["t_end_stored"] = tr.last_time();
    side["x_max"] = tr.grid.x_max;
    side["nt_steps"] = tr.grid.nt;
    side["blowup_time"] = tr.blowup_time ? nlohmann::json(*tr.blowup_time) : nlohmann::json(nullptr);
    std::ofstream js(path.string() + ".json");
    js << side.dump(2) << '\n';
}

inline SpaceTimeTrace read_trace(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::string header(trace_header_bytes, '\0');
    in.read(header.data(), static_cast<std::streamsize>(header.size()));
    if (in.gcount() != static_cast<std::streamsize>(trace_header_bytes) || std::memcmp(header.data(), "MSWL1", 5) != 0)
        throw ValidationError("not an MSWL1 trace: " + path.string());
    const char* p = header.data();
    if (detail::get_le<std::uint32_t>(p + 8) != trace_format_version)
        throw ValidationError("unsupported trace format version");
    const auto parity = detail::get_le<std::uint32_t>(p + 12);
    const auto nx = detail::get_le<std::uint64_t>(p + 16);
    const auto nt = detail::get_le<std::uint64_t>(p + 24);
    const auto stride = detail::get_le<std::uint64_t>(p + 32);
    const double dx = detail::get_le<double>(p + 40);
    const double dt = detail::get_le<double>(p + 48);
    const double t0 = detail::get_le<double>(p + 56);
    const double c = detail::get_le<double>(p + 64);
    if (parity > 2 || nx == 0 || stride == 0) throw ValidationError("corrupt trace header");

    Grid g;
    g.nx = nx;
    g.dx = dx;
    g.x_max = 0.5 * static_cast<double>(nx) * dx;
    g.x_min = -g.x_max;
    g.dt = dt;
    g.t_start = t0;
    g.nt = nt == 0 ? 1 : (nt - 1) * stride;
    g.t_end = t0 + static_cast<double>(g.nt) * dt;
    g.stagger = true;
    SpaceTimeTrace tr(g, c, stride, static_cast<Parity>(parity), nt);
    std::string body(nt * nx * 8, '\0');
    in.read(body.data(), static_cast<std::streamsize>(body.size()));
    if (in.gcount() != static_cast<std::streamsize>(body.size())) throw ValidationError("truncated trace body");
    for (std::size_t i = 0; i < tr.samples.size(); ++i) tr.samples[i] = detail::get_le<double>(body.data() + 8 * i);

    const std::filesystem::path side = path.string() + ".json";
    if (std::filesystem::exists(side)) {
        std::ifstream js(side);
        auto j = nlohmann::json::parse(js, nullptr, false);
        if (!j.is_discarded()) {
            if (j.contains("nt_steps")) {
                tr.grid.nt = j["nt_steps"].get<std::size_t>();
                tr.grid.t_end = t0 + static_cast<double>(tr.grid.nt) * dt;
            }
            if (j.contains("blowup_time") && j["blowup_time"].is_number()) tr.blowup_time = j["blowup_time"].get<double>();
        }
    }
    return tr;
}

}  // namespace mswave
