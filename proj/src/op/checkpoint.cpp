#include "neutsflow/op/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "neutsflow/op/model.hpp"

namespace neutsflow::op {

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'N', 'T', 'S', 'F'};

class Writer {
public:
    template <class T>
    void pod(T v) {
        const auto* p = reinterpret_cast<const char*>(&v);
        out_.append(p, sizeof v);
    }
    void str(std::string_view s) {
        pod(static_cast<std::uint32_t>(s.size()));
        out_.append(s);
    }
    void raw(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

class Reader {
public:
    explicit Reader(std::string_view in) : in_(in) {}
    template <class T>
    T pod() {
        T v;
        need(sizeof v);
        std::memcpy(&v, in_.data() + pos_, sizeof v);
        pos_ += sizeof v;
        return v;
    }
    std::string str() {
        const auto n = pod<std::uint32_t>();
        need(n);
        std::string s(in_.substr(pos_, n));
        pos_ += n;
        return s;
    }
    void raw(void* p, std::size_t n) {
        need(n);
        std::memcpy(p, in_.data() + pos_, n);
        pos_ += n;
    }
    bool done() const { return pos_ == in_.size(); }

private:
    void need(std::size_t n) const {
        if (in_.size() - pos_ < n) throw DataError("checkpoint: truncated file");
    }
    std::string_view in_;
    std::size_t pos_ = 0;
};

void write_pairs(Writer& w, const std::vector<std::pair<std::string, std::string>>& pairs) {
    w.pod(static_cast<std::uint32_t>(pairs.size()));
    for (const auto& [k, v] : pairs) {
        w.str(k);
        w.str(v);
    }
}

std::vector<std::pair<std::string, std::string>> read_pairs(Reader& r) {
    const auto n = r.pod<std::uint32_t>();
    std::vector<std::pair<std::string, std::string>> out;
    for (std::uint32_t i = 0; i < n; ++i) {
        std::string k = r.str();
        out.emplace_back(std::move(k), r.str());
    }
    return out;
}

void write_tensors(Writer& w, const numerics::ParameterSet& ps) {
    w.pod(static_cast<std::uint32_t>(ps.size()));
    for (std::size_t i = 0; i < ps.size(); ++i) {
        w.str(ps.name(i));
        w.pod(static_cast<std::uint8_t>(ps.is_complex(i) ? 1 : 0));
        const auto& shape = ps.shape(i);
        w.pod(static_cast<std::uint32_t>(shape.size()));
        for (auto d : shape) w.pod(static_cast<std::uint64_t>(d));
        const auto flat = ps.flat(i);
        w.raw(flat.data(), flat.size() * sizeof(double));
    }
}

numerics::ParameterSet read_tensors(Reader& r) {
    numerics::ParameterSet ps;
    const auto n = r.pod<std::uint32_t>();
    for (std::uint32_t i = 0; i < n; ++i) {
        std::string name = r.str();
        const auto dtype = r.pod<std::uint8_t>();
        if (dtype > 1) throw DataError("checkpoint: unknown dtype for " + name);
        const auto rank = r.pod<std::uint32_t>();
        if (rank > 8) throw DataError("checkpoint: implausible rank for " + name);
        Shape shape(rank);
        for (auto& d : shape) d = static_cast<std::size_t>(r.pod<std::uint64_t>());
        if (dtype == 0) {
            RealTensor t(shape);
            r.raw(t.data(), t.size() * sizeof(double));
            ps.add(std::move(name), std::move(t));
        } else {
            ComplexTensor t(shape);
            r.raw(t.data(), t.size() * sizeof(numerics::Complex));
            ps.add(std::move(name), std::move(t));
        }
    }
    return ps;
}

} // namespace

const std::string* Checkpoint::attribute(std::string_view key) const {
    for (const auto& [k, v] : attributes)
        if (k == key) return &v;
    return nullptr;
}

void Checkpoint::set_attribute(std::string key, std::string value) {
    for (auto& [k, v] : attributes)
        if (k == key) {
            v = std::move(value);
            return;
        }
    attributes.emplace_back(std::move(key), std::move(value));
}

std::string serialize(const Checkpoint& ckpt) {
    Writer w;
    w.raw(kMagic, 4);
    w.pod(Checkpoint::kVersion);
    write_pairs(w, ckpt.config.to_pairs());
    w.pod(ckpt.seed);
    write_pairs(w, ckpt.attributes);
    write_tensors(w, ckpt.params);
    write_tensors(w, ckpt.buffers);
    return w.take();
}

Checkpoint deserialize(std::string_view bytes) {
    Reader r(bytes);
    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw DataError("checkpoint: bad magic, not a checkpoint file");
    const auto version = r.pod<std::uint32_t>();
    if (version != Checkpoint::kVersion)
        throw DataError("checkpoint: unsupported version " + std::to_string(version));
    Checkpoint c;
    c.config = ModelConfig::from_pairs(read_pairs(r));
    c.seed = r.pod<std::uint64_t>();
    c.attributes = read_pairs(r);
    c.params = read_tensors(r);
    c.buffers = read_tensors(r);
    if (!r.done()) throw DataError("checkpoint: trailing bytes");
    check_params(c.config, c.params);
    return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    const std::string bytes = serialize(ckpt);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("failed writing checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint '" + path.string() + "'");
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

} // namespace neutsflow::op
