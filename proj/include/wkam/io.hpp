#pragma once

#include "wkam/config.hpp"
#include "wkam/kernel.hpp"

#include <atomic>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>

namespace wkam {

/// Shortest round-trip decimal form; +inf/-inf/nan spelled out.
inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

/// Comma-separated rows written to a file, one call per row.
class CsvWriter {
public:
    explicit CsvWriter(const std::filesystem::path& path) : out_(path, std::ios::binary) {
        if (!out_) throw ConfigError("cannot write '" + path.string() + "'");
    }

    void header(std::initializer_list<std::string> names) {
        bool first = true;
        for (const auto& n : names) {
            if (!first) out_ << ',';
            out_ << n;
            first = false;
        }
        out_ << '\n';
    }

    void header(const std::vector<std::string>& names) {
        for (std::size_t i = 0; i < names.size(); ++i) out_ << (i ? "," : "") << names[i];
        out_ << '\n';
    }

    CsvWriter& cell(double x) {
        sep();
        out_ << format_double(x);
        return *this;
    }

    CsvWriter& cell(const std::string& s) {
        sep();
        out_ << s;
        return *this;
    }

    CsvWriter& cell(std::size_t v) {
        sep();
        out_ << v;
        return *this;
    }

    void end_row() {
        out_ << '\n';
        fresh_ = true;
    }

private:
    void sep() {
        if (!fresh_) out_ << ',';
        fresh_ = false;
    }

    std::ofstream out_;
    bool fresh_ = true;
};

/// Min-plus table as row-major CSV without header; +inf as "inf".
inline void write_table_csv(const std::filesystem::path& path, const MinPlusMatrix& m) {
    CsvWriter w(path);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) w.cell(m(i, j));
        w.end_row();
    }
}

/// JSON with insertion-ordered keys, dumped with two-space indent and a trailing newline.
inline void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 14695981039346656037ull) {
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Exact textual identity of (model, grid, c): doubles in hex-float form.
template <int D>
std::string kernel_cache_key(const LagrangianModel<D>& model, const GridSpec<D>& grid, const CohomologyClass<D>& c) {
    std::ostringstream s;
    s << std::hexfloat;
    s << "wkam-kernel v1;D=" << D << ";catalog=" << catalog_name(model.catalog()) << ";A=";
    for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j) s << model.kinetic()[i][j] << ' ';
    s << ";U=";
    for (const auto& h : model.potential_terms()) {
        for (int i = 0; i < D; ++i) s << h.k[i] << ' ';
        s << h.a << '|';
    }
    s << ";n=" << grid.n << ";tau=" << grid.tau << ";vmax=" << grid.v_max
      << ";quad=" << (grid.quadrature == Quadrature::left ? "left" : "midpoint") << ";c=";
    for (int i = 0; i < D; ++i) s << c[i] << ' ';
    return s.str();
}

/**
 * On-disk cache of raw kernels under a content-hash file name. Each file
 * repeats the full key, so a hash collision reads as a miss. Writes go to a
 * temporary file that is renamed into place.
 */
template <int D>
class KernelCache {
public:
    explicit KernelCache(std::filesystem::path dir, int threads = 1) : dir_(std::move(dir)), threads_(threads) {}

    /// WEAKKAM_CACHE_DIR, else $HOME/.cache/weakkam, else ./.weakkam-cache.
    static std::filesystem::path default_dir() {
        if (const char* env = std::getenv("WEAKKAM_CACHE_DIR"); env && *env) return env;
        if (const char* home = std::getenv("HOME"); home && *home)
            return std::filesystem::path(home) / ".cache" / "weakkam";
        return ".weakkam-cache";
    }

    const std::filesystem::path& dir() const { return dir_; }
    std::size_t hits() const { return hits_; }
    std::size_t misses() const { return misses_; }

    CostKernel<D> get(const LagrangianModel<D>& model, const GridSpec<D>& grid, const CohomologyClass<D>& c) {
        const std::string key = kernel_cache_key<D>(model, grid, c);
        const auto path = dir_ / ("kernel-" + hex64(fnv1a(key)) + ".bin");
        if (auto k = load(path, key, grid, c)) {
            ++hits_;
            return std::move(*k);
        }
        ++misses_;
        auto k = build_kernel<D>(model, grid, c, 0.0, threads_);
        store(path, key, k);
        return k;
    }

    KernelFactory<D> factory() {
        return [this](const LagrangianModel<D>& m, const GridSpec<D>& g, const CohomologyClass<D>& c) {
            return get(m, g, c);
        };
    }

private:
    static constexpr char kMagic[8] = {'W', 'K', 'A', 'M', 'K', 'R', 'N', '1'};

    template <class T>
    static void put(std::ostream& out, const T& v) {
        out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }

    template <class T>
    static bool take(std::istream& in, T& v) {
        return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof v));
    }

    std::optional<CostKernel<D>> load(const std::filesystem::path& path, const std::string& key,
                                      const GridSpec<D>& grid, const CohomologyClass<D>& c) const {
        std::ifstream in(path, std::ios::binary);
        if (!in) return std::nullopt;
        char magic[8];
        if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) return std::nullopt;
        std::uint64_t key_len = 0;
        if (!take(in, key_len) || key_len != key.size()) return std::nullopt;
        std::string stored(key_len, '\0');
        if (!in.read(stored.data(), static_cast<std::streamsize>(key_len)) || stored != key) return std::nullopt;
        std::uint64_t nodes = 0;
        double max_lift = 0.0;
        if (!take(in, nodes) || nodes != grid.nodes() || !take(in, max_lift)) return std::nullopt;
        CostKernel<D> k{grid, c, 0.0, MinPlusMatrix(nodes, nodes), std::vector<IVec<D>>(nodes * nodes), max_lift};
        for (std::size_t i = 0; i < nodes; ++i) {
            auto row = k.cost.row(i);
            if (!in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(nodes * sizeof(double))))
                return std::nullopt;
        }
        if (!in.read(reinterpret_cast<char*>(k.lift.data()),
                     static_cast<std::streamsize>(k.lift.size() * sizeof(IVec<D>))))
            return std::nullopt;
        return k;
    }

    void store(const std::filesystem::path& path, const std::string& key, const CostKernel<D>& k) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) return; // the cache is best effort
        auto tmp = path;
        tmp += ".tmp-" + std::to_string(reinterpret_cast<std::uintptr_t>(this)) + "-" + std::to_string(sequence_++);
        {
            std::ofstream out(tmp, std::ios::binary);
            if (!out) return;
            out.write(kMagic, 8);
            put(out, static_cast<std::uint64_t>(key.size()));
            out.write(key.data(), static_cast<std::streamsize>(key.size()));
            put(out, static_cast<std::uint64_t>(k.nodes()));
            put(out, k.max_lift_norm);
            for (std::size_t i = 0; i < k.nodes(); ++i) {
                auto row = k.cost.row(i);
                out.write(reinterpret_cast<const char*>(row.data()),
                          static_cast<std::streamsize>(row.size() * sizeof(double)));
            }
            out.write(reinterpret_cast<const char*>(k.lift.data()),
                      static_cast<std::streamsize>(k.lift.size() * sizeof(IVec<D>)));
            if (!out) {
                out.close();
                std::filesystem::remove(tmp, ec);
                return;
            }
        }
        std::filesystem::rename(tmp, path, ec);
        if (ec) std::filesystem::remove(tmp, ec);
    }

    std::filesystem::path dir_;
    int threads_ = 1;
    std::atomic<std::size_t> hits_{0};
    std::atomic<std::size_t> misses_{0};
    std::atomic<std::size_t> sequence_{0};
};

} // namespace wkam
