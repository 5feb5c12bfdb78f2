#include "discnn/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace discnn::models {

namespace {

constexpr char kMagic[8] = {'D', 'C', 'N', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    put_u64(out, bits);
}

class Reader {
public:
    Reader(std::string bytes, std::string path) : bytes_(std::move(bytes)), path_(std::move(path)) {}

    std::uint32_t u32() { return static_cast<std::uint32_t>(u_bytes(4)); }
    std::uint64_t u64() { return u_bytes(8); }

    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }

    std::string str(std::size_t n) {
        need(n);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    bool exhausted() const { return pos_ == bytes_.size(); }

private:
    std::uint64_t u_bytes(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    void need(std::size_t n) {
        if (pos_ + n > bytes_.size()) {
            throw DataError("checkpoint '" + path_ + "': truncated file (needed " + std::to_string(n) +
                            " more bytes at offset " + std::to_string(pos_) + ")");
        }
    }

    std::string bytes_;
    std::string path_;
    std::size_t pos_ = 0;
};

std::uint8_t role_id(const std::string& role) {
    if (role == "weight") return 0;
    if (role == "bias") return 1;
    if (role == "gamma") return 2;
    if (role == "beta") return 3;
    if (role == "running_mean") return 4;
    if (role == "running_var") return 5;
    throw ConfigError("checkpoint: unknown parameter role '" + role + "'");
}

const char* role_name_from_id(std::uint8_t id) {
    switch (id) {
        case 0: return "weight";
        case 1: return "bias";
        case 2: return "gamma";
        case 3: return "beta";
        case 4: return "running_mean";
        case 5: return "running_var";
    }
    return nullptr;
}

}  // namespace

void save_checkpoint(Model& model, const std::string& path, const std::string& metadata) {
    const std::string arch = canonical_string(model.spec());
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    put_u32(out, kVersion);
    put_u64(out, fnv1a64(arch));
    put_u32(out, static_cast<std::uint32_t>(arch.size()));
    out += arch;
    put_u32(out, static_cast<std::uint32_t>(metadata.size()));
    out += metadata;

    const std::vector<ParamRef> refs = model.params();
    put_u32(out, static_cast<std::uint32_t>(refs.size()));
    for (const ParamRef& ref : refs) {
        put_u32(out, static_cast<std::uint32_t>(ref.layer_index));
        out.push_back(static_cast<char>(role_id(ref.role)));
        put_u64(out, ref.value->size());
        for (double v : *ref.value) put_f64(out, v);
    }

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw DataError("checkpoint: cannot open '" + path + "' for writing");
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!file) throw DataError("checkpoint: short write to '" + path + "'");
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw DataError("checkpoint: cannot open '" + path + "' for reading");
    std::string bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
    Reader reader(std::move(bytes), path);

    const std::string magic = reader.str(sizeof(kMagic));
    if (std::memcmp(magic.data(), kMagic, sizeof(kMagic)) != 0) {
        throw DataError("checkpoint '" + path + "': bad magic, not a checkpoint file");
    }
    const std::uint32_t version = reader.u32();
    if (version != kVersion) {
        throw DataError("checkpoint '" + path + "': format version " + std::to_string(version) +
                        " not supported (expected " + std::to_string(kVersion) + ")");
    }
    const std::uint64_t stored_fp = reader.u64();
    const std::string arch = reader.str(reader.u32());
    if (fnv1a64(arch) != stored_fp) {
        throw DataError("checkpoint '" + path + "': architecture fingerprint mismatch, file corrupt or edited");
    }

    LoadedCheckpoint loaded;
    loaded.metadata = reader.str(reader.u32());

    const ArchitectureSpec spec = parse_canonical(arch);
    num::RngStream rng(0);  // init values are overwritten below
    loaded.model = Model::build(spec, rng);

    std::vector<ParamRef> refs = loaded.model.params();
    const std::uint32_t record_count = reader.u32();
    if (record_count != refs.size()) {
        throw DataError("checkpoint '" + path + "': " + std::to_string(record_count) +
                        " parameter records but architecture declares " + std::to_string(refs.size()));
    }
    for (std::uint32_t r = 0; r < record_count; ++r) {
        const std::uint32_t layer_index = reader.u32();
        const std::uint8_t role = static_cast<std::uint8_t>(reader.str(1)[0]);
        const std::uint64_t count = reader.u64();
        const ParamRef& expect = refs[r];
        const char* role_text = role_name_from_id(role);
        if (!role_text) throw DataError("checkpoint '" + path + "': unknown role id " + std::to_string(role));
        if (layer_index != static_cast<std::uint32_t>(expect.layer_index) || std::string(role_text) != expect.role ||
            count != expect.value->size()) {
            throw DataError("checkpoint '" + path + "': record " + std::to_string(r) + " is (layer " +
                            std::to_string(layer_index) + ", " + role_text + ", " + std::to_string(count) +
                            " values) but architecture expects (layer " + std::to_string(expect.layer_index) + ", " +
                            expect.role + ", " + std::to_string(expect.value->size()) + ")");
        }
        for (std::uint64_t i = 0; i < count; ++i) (*expect.value)[i] = reader.f64();
    }
    if (!reader.exhausted()) {
        throw DataError("checkpoint '" + path + "': trailing bytes after final record");
    }
    return loaded;
}

LoadedCheckpoint load_checkpoint(const std::string& path, const ArchitectureSpec& expected) {
    LoadedCheckpoint loaded = load_checkpoint(path);
    const std::string have = canonical_string(loaded.model.spec());
    const std::string want = canonical_string(expected);
    if (have != want) {
        throw DataError("checkpoint '" + path + "': architecture mismatch\n  checkpoint: " + have +
                        "\n  expected:   " + want);
    }
    return loaded;
}

}  // namespace discnn::models
