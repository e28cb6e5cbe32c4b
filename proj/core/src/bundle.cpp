#include "semstyle/bundle.hpp"

#include <json.hpp>

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace semstyle {

using nlohmann::json;

const char* kWeightCacheEnv = "SEMSTYLE_WEIGHT_CACHE";

namespace {
constexpr char kMagic[4] = {'S', 'S', 'W', 'B'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
void write_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }

std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
}
}  // namespace

SequentialNet::SequentialNet(std::vector<LayerSpec> layers) : layers_(std::move(layers)) {}

ad::Var SequentialNet::forward_range(const ad::Var& x, size_t first, size_t last) const {
    if (last > layers_.size() || first > last) throw std::out_of_range("SequentialNet: bad layer range");
    ad::Var v = x;
    for (size_t i = first; i < last; ++i) {
        const LayerSpec& l = layers_[i];
        if (l.op == "conv") {
            ad::Var b = l.bias.empty() ? ad::Var() : ad::Var::constant(l.bias);
            v = ad::conv2d(v, ad::Var::constant(l.weight), b, l.stride, l.pad);
        } else if (l.op == "linear") {
            if (l.bias.empty())
                v = ad::matvec(ad::Var::constant(l.weight), v);
            else
                v = ad::matvec(ad::Var::constant(l.weight), v, ad::Var::constant(l.bias));
        } else if (l.op == "relu") {
            v = ad::relu(v);
        } else if (l.op == "gelu") {
            v = ad::gelu(v);
        } else if (l.op == "sigmoid") {
            v = ad::sigmoid(v);
        } else if (l.op == "flatten") {
            v = ad::flatten(v);
        } else if (l.op == "l2norm") {
            v = ad::l2_normalize(v);
        } else if (l.op == "maxpool2") {
            v = ad::maxpool2(v);
        } else if (l.op == "avgpool2") {
            v = ad::avgpool2(v);
        } else if (l.op == "upsample2") {
            v = ad::upsample_nearest2(v);
        } else if (l.op == "resize") {
            v = ad::resize_bilinear(v, l.h, l.w);
        } else if (l.op == "layernorm") {
            v = ad::layer_norm(v, ad::Var::constant(l.gamma), ad::Var::constant(l.beta), l.eps);
        } else {
            throw std::runtime_error("SequentialNet: unknown op '" + l.op + "'");
        }
    }
    return v;
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

void WeightBundle::save(const std::string& path) const {
    json meta;
    meta["kind"] = kind;
    meta["scalars"] = scalars;
    meta["taps"] = taps;
    json jl = json::array();

    std::vector<const Tensor*> blobs;
    std::uint64_t offset = 0;
    auto add_tensor = [&](const Tensor& t, json& dst, const char* field) {
        if (t.empty()) return;
        json jt;
        jt["shape"] = t.shape();
        jt["offset"] = offset;
        dst[field] = jt;
        blobs.push_back(&t);
        offset += static_cast<std::uint64_t>(t.numel());
    };
    for (const LayerSpec& l : layers) {
        json j;
        j["op"] = l.op;
        if (l.op == "conv") {
            j["stride"] = l.stride;
            j["pad"] = l.pad;
        }
        if (l.op == "resize") {
            j["h"] = l.h;
            j["w"] = l.w;
        }
        if (l.op == "layernorm") j["eps"] = l.eps;
        add_tensor(l.weight, j, "weight");
        add_tensor(l.bias, j, "bias");
        add_tensor(l.gamma, j, "gamma");
        add_tensor(l.beta, j, "beta");
        jl.push_back(std::move(j));
    }
    meta["layers"] = std::move(jl);

    std::string header = meta.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write weight bundle '" + path + "'");
    out.write(kMagic, 4);
    write_u32(out, kVersion);
    write_u64(out, header.size());
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (const Tensor* t : blobs)
        out.write(reinterpret_cast<const char*>(t->data()), static_cast<std::streamsize>(t->numel() * 8));
    if (!out) throw std::runtime_error("short write on weight bundle '" + path + "'");
}

WeightBundle WeightBundle::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("weight bundle not found: '" + path +
                                 "' (pretrained weights are fetched and exported offline; see tools/export_weights.py)");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("'" + path + "' is not a weight bundle");
    std::uint32_t version = read_u32(in);
    if (version != kVersion)
        throw std::runtime_error("weight bundle '" + path + "' has unsupported version " + std::to_string(version));
    std::uint64_t hlen = read_u64(in);
    std::string header(hlen, '\0');
    in.read(header.data(), static_cast<std::streamsize>(hlen));
    if (!in) throw std::runtime_error("truncated weight bundle '" + path + "'");
    json meta = json::parse(header);

    std::streampos blob_start = in.tellg();
    WeightBundle b;
    b.kind = meta.at("kind").get<std::string>();
    if (meta.contains("scalars")) b.scalars = meta["scalars"].get<std::map<std::string, double>>();
    if (meta.contains("taps")) b.taps = meta["taps"].get<std::map<std::string, int>>();

    auto read_tensor = [&](const json& j) {
        std::vector<int> shape = j.at("shape").get<std::vector<int>>();
        std::uint64_t offset = j.at("offset").get<std::uint64_t>();
        Tensor t(shape);
        in.seekg(blob_start + static_cast<std::streamoff>(offset * 8));
        in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.numel() * 8));
        if (!in) throw std::runtime_error("truncated tensor data in weight bundle '" + path + "'");
        return t;
    };
    for (const json& j : meta.at("layers")) {
        LayerSpec l;
        l.op = j.at("op").get<std::string>();
        l.stride = j.value("stride", 1);
        l.pad = j.value("pad", 0);
        l.h = j.value("h", 0);
        l.w = j.value("w", 0);
        l.eps = j.value("eps", 1e-5);
        if (j.contains("weight")) l.weight = read_tensor(j["weight"]);
        if (j.contains("bias")) l.bias = read_tensor(j["bias"]);
        if (j.contains("gamma")) l.gamma = read_tensor(j["gamma"]);
        if (j.contains("beta")) l.beta = read_tensor(j["beta"]);
        b.layers.push_back(std::move(l));
    }
    return b;
}

// ---------------------------------------------------------------------------
// adapters
// ---------------------------------------------------------------------------

std::string resolve_weight_cache(const std::string& explicit_dir) {
    if (!explicit_dir.empty()) return explicit_dir;
    const char* env = std::getenv(kWeightCacheEnv);
    if (env && *env) return env;
    throw std::runtime_error(std::string("weight cache directory not set; pass --weight-cache or set $") +
                             kWeightCacheEnv);
}

namespace {
double require_scalar(const WeightBundle& b, const char* name) {
    auto it = b.scalars.find(name);
    if (it == b.scalars.end())
        throw std::runtime_error("weight bundle (" + b.kind + ") is missing required scalar '" + name + "'");
    return it->second;
}
}  // namespace

BundleTextEncoder::BundleTextEncoder(WeightBundle bundle)
    : dim_(static_cast<int>(require_scalar(bundle, "dim"))),
      buckets_(static_cast<int>(require_scalar(bundle, "hash_buckets"))),
      net_(std::move(bundle.layers)) {
    if (bundle.kind != "text_encoder") throw std::runtime_error("expected a text_encoder bundle, got " + bundle.kind);
}

Tensor BundleTextEncoder::featurize(const std::string& text) const {
    Tensor v({buckets_});
    for (size_t i = 0; i < text.size(); ++i) {
        std::string gram = text.substr(i, 3);
        v[static_cast<std::int64_t>(fnv1a64(gram) % static_cast<std::uint64_t>(buckets_))] += 1.0;
    }
    return v;
}

Tensor BundleTextEncoder::encode_text(const std::string& text) const {
    ad::Var out = net_.forward(ad::Var::constant(featurize(text)));
    return out.value();
}

std::string BundleTextEncoder::describe() const {
    return "bundle-text(dim=" + std::to_string(dim_) + ",buckets=" + std::to_string(buckets_) + ")";
}

BundleImageEncoder::BundleImageEncoder(WeightBundle bundle)
    : dim_(static_cast<int>(require_scalar(bundle, "dim"))),
      resolution_(static_cast<int>(require_scalar(bundle, "input_resolution"))),
      net_(std::move(bundle.layers)) {
    if (bundle.kind != "image_encoder")
        throw std::runtime_error("expected an image_encoder bundle, got " + bundle.kind);
}

ad::Var BundleImageEncoder::encode(const ad::Var& image) const {
    ad::Var v = image;
    if (image.value().dim(1) != resolution_ || image.value().dim(2) != resolution_)
        v = ad::resize_bilinear(v, resolution_, resolution_);
    return net_.forward(v);
}

std::string BundleImageEncoder::describe() const {
    return "bundle-image(dim=" + std::to_string(dim_) + ",res=" + std::to_string(resolution_) + ")";
}

BundleFeatureExtractor::BundleFeatureExtractor(WeightBundle bundle)
    : min_input_(static_cast<int>(require_scalar(bundle, "min_input"))), net_(std::move(bundle.layers)) {
    if (bundle.kind != "feature_extractor")
        throw std::runtime_error("expected a feature_extractor bundle, got " + bundle.kind);
    if (bundle.taps.size() != 2) throw std::runtime_error("feature_extractor bundle must declare exactly two taps");
    for (const auto& [name, idx] : bundle.taps) taps_.emplace_back(name, idx);
    // keep deterministic order: shallower tap first
    if (taps_[0].second > taps_[1].second) std::swap(taps_[0], taps_[1]);
    for (const auto& [name, idx] : taps_)
        if (idx < 1 || static_cast<size_t>(idx) > net_.size())
            throw std::runtime_error("feature tap '" + name + "' is out of range");
}

std::vector<std::pair<std::string, ad::Var>> BundleFeatureExtractor::extract(const ad::Var& image) const {
    ad::Var shallow = net_.forward_prefix(image, static_cast<size_t>(taps_[0].second));
    ad::Var deep = net_.forward_range(shallow, static_cast<size_t>(taps_[0].second),
                                      static_cast<size_t>(taps_[1].second));
    return {{taps_[0].first, shallow}, {taps_[1].first, deep}};
}

std::string BundleFeatureExtractor::describe() const {
    return "bundle-features(" + taps_[0].first + "," + taps_[1].first + ")";
}

EncoderSet load_encoders_from_cache(const std::string& cache_dir) {
    EncoderSet set;
    set.text = std::make_shared<BundleTextEncoder>(WeightBundle::load(cache_dir + "/text_encoder.sswb"));
    set.image = std::make_shared<BundleImageEncoder>(WeightBundle::load(cache_dir + "/image_encoder.sswb"));
    set.features =
        std::make_shared<BundleFeatureExtractor>(WeightBundle::load(cache_dir + "/feature_extractor.sswb"));
    return set;
}

}  // namespace semstyle
