#include "csf/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "csf/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is little-endian; big-endian hosts unsupported");

namespace csf {

namespace {

constexpr char kMagic[8] = {'C', 'S', 'F', 'C', 'K', 'P', 'T', '\0'};

void write_u32(std::ostream& os, uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void write_u64(std::ostream& os, uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }

uint32_t read_u32(std::istream& is) {
    uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    if (!is) throw ConfigError("checkpoint: truncated file");
    return v;
}

uint64_t read_u64(std::istream& is) {
    uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    if (!is) throw ConfigError("checkpoint: truncated file");
    return v;
}

void check_magic(std::istream& is) {
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        throw ConfigError("checkpoint: bad magic (not a checkpoint file)");
    const uint32_t version = read_u32(is);
    if (version != kCheckpointVersion)
        throw ConfigError("checkpoint: unsupported format version " + std::to_string(version));
}

}  // namespace

void save_checkpoint(const std::string& path, const std::string& config_echo,
                     std::span<Param* const> params) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("checkpoint: cannot open for writing: " + path);
    os.write(kMagic, 8);
    write_u32(os, kCheckpointVersion);
    write_u32(os, static_cast<uint32_t>(config_echo.size()));
    os.write(config_echo.data(), static_cast<std::streamsize>(config_echo.size()));
    write_u64(os, params.size());
    for (const Param* p : params) {
        write_u32(os, static_cast<uint32_t>(p->name.size()));
        os.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
        write_u32(os, static_cast<uint32_t>(p->value.rows()));
        write_u32(os, static_cast<uint32_t>(p->value.cols()));
        os.write(reinterpret_cast<const char*>(p->value.data()),
                 static_cast<std::streamsize>(p->value.size() * sizeof(double)));
    }
    if (!os) throw DataError("checkpoint: write failed: " + path);
}

CheckpointInfo load_checkpoint(const std::string& path, std::span<Param* const> params,
                               bool strict) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("checkpoint: cannot open: " + path);
    check_magic(is);
    CheckpointInfo info;
    const uint32_t cfg_len = read_u32(is);
    info.config_echo.resize(cfg_len);
    is.read(info.config_echo.data(), cfg_len);
    if (!is) throw ConfigError("checkpoint: truncated config echo");

    std::map<std::string, Param*> by_name;
    for (Param* p : params) by_name[p->name] = p;

    const uint64_t count = read_u64(is);
    for (uint64_t i = 0; i < count; ++i) {
        const uint32_t name_len = read_u32(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        const int rows = static_cast<int>(read_u32(is));
        const int cols = static_cast<int>(read_u32(is));
        const size_t n = static_cast<size_t>(rows) * static_cast<size_t>(cols);
        auto it = by_name.find(name);
        if (it == by_name.end()) {
            if (strict) throw ConfigError("checkpoint: unexpected tensor '" + name + "'");
            is.seekg(static_cast<std::streamoff>(n * sizeof(double)), std::ios::cur);
            info.skipped.push_back(name);
            continue;
        }
        Param& p = *it->second;
        if (p.value.rows() != rows || p.value.cols() != cols)
            throw ConfigError("checkpoint: shape mismatch for '" + name + "': file " +
                              std::to_string(rows) + "x" + std::to_string(cols) + ", expected " +
                              std::to_string(p.value.rows()) + "x" +
                              std::to_string(p.value.cols()));
        is.read(reinterpret_cast<char*>(p.value.data()),
                static_cast<std::streamsize>(n * sizeof(double)));
        if (!is) throw ConfigError("checkpoint: truncated tensor '" + name + "'");
        info.loaded.push_back(name);
        by_name.erase(it);
    }
    if (!by_name.empty())
        throw ConfigError("checkpoint: missing tensor '" + by_name.begin()->first + "' (and " +
                          std::to_string(by_name.size() - 1) + " more)");
    return info;
}

std::string read_checkpoint_config(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("checkpoint: cannot open: " + path);
    check_magic(is);
    const uint32_t cfg_len = read_u32(is);
    std::string cfg(cfg_len, '\0');
    is.read(cfg.data(), cfg_len);
    if (!is) throw ConfigError("checkpoint: truncated config echo");
    return cfg;
}

std::string file_content_hash(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("hash: cannot open: " + path);
    uint64_t h = 1469598103934665603ull;
    char buf[65536];
    while (is) {
        is.read(buf, sizeof(buf));
        const std::streamsize got = is.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<uint8_t>(buf[i]);
            h *= 1099511628211ull;
        }
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return std::string(out);
}

}  // namespace csf
