#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "dense.hpp"
#include "ingest.hpp"
#include "rng.hpp"
#include "rp.hpp"

namespace rphar {

/// On-disk store of dense descriptor sets. Entries are keyed by everything that determines
/// their content, so a changed sample or setting simply misses the cache.
class DescriptorCache {
public:
    static constexpr std::uint32_t kVersion = 1;

    explicit DescriptorCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

    /// Canonical key text for one (sample, RP settings, descriptor, grid) combination.
    static std::string key(const SensorSample& s, RpVariant variant, const RpConfig& rp, DescriptorKind kind,
                           const GridSpec& grid) {
        Fnv1a h;
        for (const auto& ax : s.axes) h.update(ax.data(), ax.size() * sizeof(double));
        std::string k = "v" + std::to_string(kVersion) + "|id=" + s.id + "|label=" + s.label +
                        "|data=" + std::to_string(h.digest()) + "|variant=" + to_string(variant) +
                        "|m=" + std::to_string(rp.m) + "|d=" + std::to_string(rp.d) +
                        "|eps=" + (rp.epsilon ? format_double(*rp.epsilon) : std::string("none")) +
                        "|pol=" + to_string(rp.polarity) + "|desc=" + to_string(kind) +
                        "|stride=" + std::to_string(grid.stride) + "|patch=" + std::to_string(grid.patch);
        return k;
    }

    std::optional<LocalDescriptorSet> load(const std::string& key) const {
        std::ifstream in(path_for(key), std::ios::binary);
        if (!in) return std::nullopt;
        char magic[4];
        std::uint32_t version = 0, key_len = 0;
        in.read(magic, 4);
        read(in, version);
        read(in, key_len);
        if (!in || std::string(magic, 4) != "RPHD" || version != kVersion || key_len != key.size()) return std::nullopt;
        std::string stored(key_len, '\0');
        in.read(stored.data(), key_len);
        if (!in || stored != key) return std::nullopt;

        LocalDescriptorSet set;
        std::int32_t w = 0, h = 0, kind = 0;
        std::uint64_t dim = 0, count = 0;
        read(in, w);
        read(in, h);
        read(in, kind);
        read(in, dim);
        read(in, count);
        if (!in || kind < 0 || kind > 3) return std::nullopt;
        set.width = w;
        set.height = h;
        set.kind = static_cast<DescriptorKind>(kind);
        set.dim = dim;
        set.points.resize(count);
        set.data.resize(count * dim);
        in.read(reinterpret_cast<char*>(set.points.data()), static_cast<std::streamsize>(count * sizeof(GridPoint)));
        in.read(reinterpret_cast<char*>(set.data.data()), static_cast<std::streamsize>(set.data.size() * sizeof(float)));
        if (!in) return std::nullopt;
        return set;
    }

    /// Writes atomically (temp file + rename); failures leave the cache unchanged.
    void store(const std::string& key, const LocalDescriptorSet& set) const {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        const auto target = path_for(key);
        auto tmp = target;
        tmp += ".tmp" + std::to_string(std::hash<std::string>{}(key) ^ reinterpret_cast<std::uintptr_t>(&set));
        {
            std::ofstream out(tmp, std::ios::binary);
            if (!out) return;
            out.write("RPHD", 4);
            write(out, kVersion);
            write(out, static_cast<std::uint32_t>(key.size()));
            out.write(key.data(), static_cast<std::streamsize>(key.size()));
            write(out, static_cast<std::int32_t>(set.width));
            write(out, static_cast<std::int32_t>(set.height));
            write(out, static_cast<std::int32_t>(set.kind));
            write(out, static_cast<std::uint64_t>(set.dim));
            write(out, static_cast<std::uint64_t>(set.points.size()));
            out.write(reinterpret_cast<const char*>(set.points.data()),
                      static_cast<std::streamsize>(set.points.size() * sizeof(GridPoint)));
            out.write(reinterpret_cast<const char*>(set.data.data()),
                      static_cast<std::streamsize>(set.data.size() * sizeof(float)));
            if (!out) {
                out.close();
                std::filesystem::remove(tmp, ec);
                return;
            }
        }
        std::filesystem::rename(tmp, target, ec);
        if (ec) std::filesystem::remove(tmp, ec);
    }

    std::filesystem::path path_for(const std::string& key) const {
        Fnv1a h;
        h.update(key);
        char name[32];
        std::snprintf(name, sizeof name, "%016llx.rphd", static_cast<unsigned long long>(h.digest()));
        return dir_ / name;
    }

private:
    template <typename T>
    static void read(std::istream& in, T& v) { in.read(reinterpret_cast<char*>(&v), sizeof v); }
    template <typename T>
    static void write(std::ostream& out, const T& v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

    std::filesystem::path dir_;
};

}  // namespace rphar
