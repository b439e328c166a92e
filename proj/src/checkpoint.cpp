#include "ecgnet/checkpoint.hpp"

#include "ecgnet/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

namespace ecgnet {

namespace {

constexpr char kMagic[8] = {'E', 'C', 'G', 'N', 'E', 'T', 'C', 'K'};
constexpr std::string_view kExtraPrefix = "extra.";

class Writer {
public:
    void bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const std::byte*>(data);
        out.insert(out.end(), p, p + n);
    }
    template <typename T>
    void le(T v) {
        for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFF));
    }
    void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
    void text(const std::string& s) { bytes(s.data(), s.size()); }

    std::vector<std::byte> out;
};

class Reader {
public:
    explicit Reader(std::span<const std::byte> in) : in_(in) {}

    std::span<const std::byte> take(std::size_t n) {
        if (n > in_.size() - pos_) throw TruncationError("checkpoint ends early");
        auto s = in_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    template <typename T>
    T le() {
        const auto s = take(sizeof(T));
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(std::to_integer<std::uint64_t>(s[i]) << (8 * i));
        return v;
    }
    double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
    std::string text(std::size_t n) {
        const auto s = take(n);
        return std::string(reinterpret_cast<const char*>(s.data()), n);
    }
    bool done() const { return pos_ == in_.size(); }

private:
    std::span<const std::byte> in_;
    std::size_t pos_ = 0;
};

void write_array(Writer& w, const std::string& name, const Tensor& t) {
    w.le<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    w.text(name);
    w.le<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) w.le<std::uint64_t>(d);
    for (double v : t.data()) w.f64(v);
}

} // namespace

std::vector<std::byte> encode_checkpoint(SeResNet& model, const KeyValues& extra) {
    Writer w;
    w.bytes(kMagic, sizeof kMagic);
    w.le<std::uint32_t>(kCheckpointVersion);
    KeyValues config = model.config().to_key_values();
    for (const auto& [k, v] : extra) config[std::string(kExtraPrefix) + k] = v;
    const auto text = format_key_values(config);
    w.le<std::uint64_t>(text.size());
    w.text(text);

    const auto refs = model.refs();
    w.le<std::uint32_t>(static_cast<std::uint32_t>(refs.params.size() + refs.buffers.size()));
    for (const auto* p : refs.params) write_array(w, p->name, p->value);
    for (const auto* b : refs.buffers) write_array(w, b->name, b->value);
    return std::move(w.out);
}

void save_checkpoint(const std::filesystem::path& path, SeResNet& model, const KeyValues& extra) {
    const auto bytes = encode_checkpoint(model, extra);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write checkpoint " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

LoadedCheckpoint decode_checkpoint(std::span<const std::byte> bytes) {
    Reader r(bytes);
    const auto magic = r.take(sizeof kMagic);
    if (std::memcmp(magic.data(), kMagic, sizeof kMagic) != 0) throw ParseError("not an ecgnet checkpoint");
    const auto version = r.le<std::uint32_t>();
    if (version != kCheckpointVersion) throw ParseError("unsupported checkpoint version " + std::to_string(version));
    const auto text_len = r.le<std::uint64_t>();
    const auto all = parse_key_values(r.text(static_cast<std::size_t>(text_len)));

    KeyValues model_kv, extra;
    for (const auto& [k, v] : all) {
        if (k.starts_with(kExtraPrefix)) extra[k.substr(kExtraPrefix.size())] = v;
        else model_kv[k] = v;
    }
    LoadedCheckpoint loaded{SeResNet(SeResNetConfig::from_key_values(model_kv)), std::move(extra)};

    std::map<std::string, Tensor*, std::less<>> slots;
    auto refs = loaded.model.refs();
    for (auto* p : refs.params) slots[p->name] = &p->value;
    for (auto* b : refs.buffers) slots[b->name] = &b->value;

    const auto count = r.le<std::uint32_t>();
    if (count != slots.size())
        throw ValidationError("checkpoint has " + std::to_string(count) + " arrays, model expects " +
                              std::to_string(slots.size()));
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name = r.text(r.le<std::uint32_t>());
        const auto rank = r.le<std::uint32_t>();
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) d = static_cast<std::size_t>(r.le<std::uint64_t>());
        const auto it = slots.find(name);
        if (it == slots.end()) throw ValidationError("checkpoint array '" + name + "' is not part of the model");
        if (it->second->shape() != shape) throw ShapeError("checkpoint array '" + name + "' has the wrong shape");
        for (auto& v : it->second->data()) v = r.f64();
    }
    if (!r.done()) throw ParseError("trailing bytes after checkpoint arrays");
    return loaded;
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open checkpoint " + path.string());
    const std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(std::as_bytes(std::span(raw)));
}

} // namespace ecgnet
