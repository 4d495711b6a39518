#pragma once

// Binary model container: "ARTA" magic, version, named float32 tensors,
// a key=value config echo, and a trailing CRC-32 of everything before it.
// Writes are atomic (temp file + rename).

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "arta/model.hpp"
#include "arta/tensor.hpp"

namespace arta {

namespace detail {

inline std::uint32_t crc32_update(std::uint32_t crc, const unsigned char* data, std::size_t len) {
    static const std::uint32_t* table = [] {
        static std::uint32_t t[256];
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    crc ^= 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

inline std::uint32_t crc32(const std::string& bytes) {
    return crc32_update(0, reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size());
}

inline void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

inline void put_f32(std::string& out, float f) {
    std::uint32_t v;
    std::memcpy(&v, &f, 4);
    put_u32(out, v);
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    std::uint32_t u32() {
        if (pos + 4 > buf.size()) throw ConfigError("model file truncated");
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(buf[pos + static_cast<std::size_t>(i)]);
        pos += 4;
        return v;
    }
    float f32() {
        std::uint32_t v = u32();
        float f;
        std::memcpy(&f, &v, 4);
        return f;
    }
    std::string bytes(std::size_t n) {
        if (pos + n > buf.size()) throw ConfigError("model file truncated");
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

constexpr std::uint32_t kModelVersion = 1;

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

struct NamedTensors {
    std::vector<std::pair<std::string, Tensor>> items;

    void add(const std::string& name, const Tensor& t) { items.emplace_back(name, t); }
    const Tensor* find(const std::string& name) const {
        for (const auto& [n, t] : items)
            if (n == name) return &t;
        return nullptr;
    }
};

inline std::string serialize_model(const ModelParams& m) {
    NamedTensors nts;
    {
        auto names = DetectorParams::tensor_names();
        auto tensors = m.detector.tensors();
        for (std::size_t i = 0; i < tensors.size(); ++i) {
            nts.add(names[i], *tensors[i]);
            nts.add("adam." + names[i] + ".m", m.opt_detector.m[i]);
            nts.add("adam." + names[i] + ".v", m.opt_detector.v[i]);
        }
    }
    {
        auto names = DetectorParams::norm_matrix_names();
        for (std::size_t i = 0; i < names.size(); ++i) nts.add("sn." + names[i] + ".u", m.spectral[i].u);
    }
    if (m.has_generator()) {
        auto names = GeneratorParams::tensor_names();
        auto tensors = m.generator->tensors();
        for (std::size_t i = 0; i < tensors.size(); ++i) {
            nts.add(names[i], *tensors[i]);
            nts.add("adam." + names[i] + ".m", m.opt_generator.m[i]);
            nts.add("adam." + names[i] + ".v", m.opt_generator.v[i]);
        }
    }
    {
        Tensor mu = Tensor::zeros({m.features});
        Tensor sg = Tensor::zeros({m.features});
        for (int i = 0; i < m.features; ++i) {
            mu[static_cast<std::size_t>(i)] = static_cast<float>(m.normalizer.mean[static_cast<std::size_t>(i)]);
            sg[static_cast<std::size_t>(i)] = static_cast<float>(m.normalizer.sigma[static_cast<std::size_t>(i)]);
        }
        nts.add("norm.mean", mu);
        nts.add("norm.sigma", sg);
    }

    std::string out;
    out += "ARTA";
    detail::put_u32(out, detail::kModelVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(nts.items.size()));
    for (const auto& [name, t] : nts.items) {
        detail::put_u32(out, static_cast<std::uint32_t>(name.size()));
        out += name;
        detail::put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
        for (int d : t.shape) detail::put_u32(out, static_cast<std::uint32_t>(d));
        for (float v : t.data) detail::put_f32(out, v);
    }

    std::string echo;
    echo += "window=" + std::to_string(m.window) + "\n";
    echo += "hidden=" + std::to_string(m.hidden) + "\n";
    echo += "features=" + std::to_string(m.features) + "\n";
    echo += std::string("aggregator=") + to_string(m.aggregator) + "\n";
    echo += std::string("baseline_zeros=") + (m.baseline_zeros ? "1" : "0") + "\n";
    echo += std::string("has_generator=") + (m.has_generator() ? "1" : "0") + "\n";
    echo += "lambda_sp=" + detail::format_double(m.lambda_sp) + "\n";
    echo += "gamma_rob=" + detail::format_double(m.gamma_rob) + "\n";
    echo += "seed=" + std::to_string(m.seed) + "\n";
    echo += "adam_t_det=" + std::to_string(m.opt_detector.t) + "\n";
    echo += "adam_t_gen=" + std::to_string(m.has_generator() ? m.opt_generator.t : 0) + "\n";
    detail::put_u32(out, static_cast<std::uint32_t>(echo.size()));
    out += echo;

    detail::put_u32(out, detail::crc32(out));
    return out;
}

inline void save_model(const ModelParams& m, const std::string& path) {
    std::string bytes = serialize_model(m);
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw ConfigError("cannot write model file: " + tmp);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw ConfigError("model write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw ConfigError("cannot move model file into place: " + path);
}

inline ModelParams load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open model file: " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < 12) throw ConfigError("model file truncated: " + path);

    std::string body = buf.substr(0, buf.size() - 4);
    detail::Reader crc_r{buf, buf.size() - 4};
    if (crc_r.u32() != detail::crc32(body)) throw ConfigError("model file checksum mismatch: " + path);

    detail::Reader r{buf};
    if (r.bytes(4) != "ARTA") throw ConfigError("not a model file: " + path);
    std::uint32_t version = r.u32();
    if (version != detail::kModelVersion)
        throw ConfigError("unsupported model version " + std::to_string(version));

    NamedTensors nts;
    std::uint32_t count = r.u32();
    for (std::uint32_t k = 0; k < count; ++k) {
        std::string name = r.bytes(r.u32());
        std::uint32_t rank = r.u32();
        std::vector<int> shape;
        std::int64_t numel = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            shape.push_back(static_cast<int>(r.u32()));
            numel *= shape.back();
        }
        std::vector<float> data(static_cast<std::size_t>(numel));
        for (auto& v : data) v = r.f32();
        nts.add(name, Tensor(shape, std::move(data)));
    }

    std::map<std::string, std::string> echo;
    {
        std::string text = r.bytes(r.u32());
        std::size_t start = 0;
        while (start < text.size()) {
            std::size_t end = text.find('\n', start);
            if (end == std::string::npos) end = text.size();
            std::string line = text.substr(start, end - start);
            start = end + 1;
            auto eq = line.find('=');
            if (eq != std::string::npos) echo[line.substr(0, eq)] = line.substr(eq + 1);
        }
    }
    auto echo_get = [&](const std::string& key) -> const std::string& {
        auto it = echo.find(key);
        if (it == echo.end()) throw ConfigError("model file missing config key: " + key);
        return it->second;
    };

    ModelParams m;
    m.window = std::stoi(echo_get("window"));
    m.hidden = std::stoi(echo_get("hidden"));
    m.features = std::stoi(echo_get("features"));
    m.aggregator = aggregator_from_string(echo_get("aggregator"));
    m.baseline_zeros = echo_get("baseline_zeros") == "1";
    m.lambda_sp = std::stod(echo_get("lambda_sp"));
    m.gamma_rob = std::stod(echo_get("gamma_rob"));
    m.seed = std::stoull(echo_get("seed"));
    bool has_gen = echo_get("has_generator") == "1";

    auto fetch = [&](const std::string& name) -> const Tensor& {
        const Tensor* t = nts.find(name);
        if (!t) throw ConfigError("model file missing tensor: " + name);
        return *t;
    };

    {
        auto names = DetectorParams::tensor_names();
        auto tensors = m.detector.tensors();
        m.opt_detector.m.clear();
        m.opt_detector.v.clear();
        for (std::size_t i = 0; i < tensors.size(); ++i) {
            *tensors[i] = fetch(names[i]);
            m.opt_detector.m.push_back(fetch("adam." + names[i] + ".m"));
            m.opt_detector.v.push_back(fetch("adam." + names[i] + ".v"));
        }
        m.opt_detector.t = std::stoll(echo_get("adam_t_det"));
    }
    {
        auto names = DetectorParams::norm_matrix_names();
        m.spectral.clear();
        for (const auto& n : names) {
            SpectralState s;
            s.u = fetch("sn." + n + ".u");
            m.spectral.push_back(std::move(s));
        }
    }
    if (has_gen) {
        m.generator = GeneratorParams{};
        auto names = GeneratorParams::tensor_names();
        auto tensors = m.generator->tensors();
        m.opt_generator.m.clear();
        m.opt_generator.v.clear();
        for (std::size_t i = 0; i < tensors.size(); ++i) {
            *tensors[i] = fetch(names[i]);
            m.opt_generator.m.push_back(fetch("adam." + names[i] + ".m"));
            m.opt_generator.v.push_back(fetch("adam." + names[i] + ".v"));
        }
        m.opt_generator.t = std::stoll(echo_get("adam_t_gen"));
    }
    {
        const Tensor& mu = fetch("norm.mean");
        const Tensor& sg = fetch("norm.sigma");
        m.normalizer.mean.assign(mu.data.begin(), mu.data.end());
        m.normalizer.sigma.assign(sg.data.begin(), sg.data.end());
    }
    m.detector.encoder.validate();
    m.detector.decoder.validate();
    return m;
}

}  // namespace arta
