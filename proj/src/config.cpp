#include "csf/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace csf {

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

class Extractor {
public:
    Extractor(const RawConfig& raw, const std::string& section) : section_(section) {
        const auto it = raw.find(section);
        if (it != raw.end()) kv_ = &it->second;
    }

    std::string str(const std::string& key, const std::string& dflt) const {
        const std::string* v = find(key);
        return v ? *v : dflt;
    }

    int integer(const std::string& key, int dflt) const {
        const std::string* v = find(key);
        if (!v) return dflt;
        try {
            size_t pos = 0;
            const long r = std::stol(*v, &pos);
            if (pos != v->size()) throw std::invalid_argument("junk");
            return static_cast<int>(r);
        } catch (const std::exception&) {
            throw ConfigError(section_ + "." + key + ": '" + *v + "' is not an integer");
        }
    }

    uint64_t u64(const std::string& key, uint64_t dflt) const {
        const std::string* v = find(key);
        if (!v) return dflt;
        try {
            size_t pos = 0;
            const unsigned long long r = std::stoull(*v, &pos);
            if (pos != v->size()) throw std::invalid_argument("junk");
            return r;
        } catch (const std::exception&) {
            throw ConfigError(section_ + "." + key + ": '" + *v + "' is not an unsigned integer");
        }
    }

    double real(const std::string& key, double dflt) const {
        const std::string* v = find(key);
        if (!v) return dflt;
        try {
            size_t pos = 0;
            const double r = std::stod(*v, &pos);
            if (pos != v->size()) throw std::invalid_argument("junk");
            return r;
        } catch (const std::exception&) {
            throw ConfigError(section_ + "." + key + ": '" + *v + "' is not a number");
        }
    }

    bool boolean(const std::string& key, bool dflt) const {
        const std::string* v = find(key);
        if (!v) return dflt;
        if (*v == "true" || *v == "1" || *v == "yes") return true;
        if (*v == "false" || *v == "0" || *v == "no") return false;
        throw ConfigError(section_ + "." + key + ": '" + *v + "' is not a boolean");
    }

    std::vector<std::string> list(const std::string& key) const {
        const std::string* v = find(key);
        std::vector<std::string> out;
        if (!v) return out;
        std::stringstream ss(*v);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) out.push_back(item);
        }
        return out;
    }

private:
    const std::string* find(const std::string& key) const {
        if (!kv_) return nullptr;
        const auto it = kv_->find(key);
        return it == kv_->end() ? nullptr : &it->second;
    }

    const std::map<std::string, std::string>* kv_ = nullptr;
    std::string section_;
};

}  // namespace

RawConfig parse_ini(const std::string& text) {
    RawConfig cfg;
    std::string section;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const size_t hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError("config line " + std::to_string(lineno) + ": empty section name");
            cfg[section];
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        if (section.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": key outside a section");
        cfg[section][key] = value;
    }
    return cfg;
}

RawConfig parse_ini_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_ini(ss.str());
}

void apply_overrides(RawConfig& cfg, const std::vector<std::string>& overrides) {
    for (const std::string& ov : overrides) {
        const size_t eq = ov.find('=');
        const size_t dot = ov.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq)
            throw ConfigError("override must look like section.key=value: '" + ov + "'");
        const std::string section = trim(ov.substr(0, dot));
        const std::string key = trim(ov.substr(dot + 1, eq - dot - 1));
        const std::string value = trim(ov.substr(eq + 1));
        if (section.empty() || key.empty())
            throw ConfigError("override must look like section.key=value: '" + ov + "'");
        cfg[section][key] = value;
    }
}

RunConfig run_config_from_raw(const RawConfig& raw) {
    for (const auto& [section, _] : raw)
        if (section != "model" && section != "data" && section != "train" && section != "output")
            throw ConfigError("unknown config section [" + section + "]");

    RunConfig rc;
    const Extractor m(raw, "model");
    rc.model.patching.patch_len = m.integer("patch_len", rc.model.patching.patch_len);
    rc.model.patching.stride = m.integer("stride", rc.model.patching.stride);
    rc.model.patching.base_dim = m.integer("base_dim", rc.model.patching.base_dim);
    rc.model.patching.repatch_len = m.integer("repatch_len", rc.model.patching.repatch_len);
    rc.model.patching.max_len = m.integer("max_len", rc.model.patching.max_len);
    rc.model.num_heads = m.integer("heads", rc.model.num_heads);
    rc.model.ff_dim = m.integer("d_ff", rc.model.ff_dim);
    rc.model.encoder_depth = m.integer("encoder_depth", rc.model.encoder_depth);
    rc.model.alpha = m.real("alpha", rc.model.alpha);

    const Extractor d(raw, "data");
    rc.data.kind = d.str("kind", rc.data.kind);
    rc.data.path = d.str("path", rc.data.path);
    rc.data.train_path = d.str("train_path", rc.data.train_path);
    rc.data.test_path = d.str("test_path", rc.data.test_path);
    rc.data.columns = d.list("columns");
    rc.data.synth_kind = d.str("synth_kind", rc.data.synth_kind);
    rc.data.count = d.integer("count", rc.data.count);
    rc.data.noise = d.real("noise", rc.data.noise);
    rc.data.ar_coeff = d.real("ar_coeff", rc.data.ar_coeff);
    rc.data.min_len = d.integer("min_len", rc.data.min_len);
    rc.data.max_len = d.integer("max_len", rc.data.max_len);
    rc.data.horizon = d.integer("horizon", rc.data.horizon);
    rc.data.classes = d.integer("classes", rc.data.classes);
    rc.data.anchor_stride = d.integer("anchor_stride", rc.data.anchor_stride);
    rc.data.crop = d.boolean("crop", rc.data.crop);
    rc.data.split.train_frac = d.real("train_frac", rc.data.split.train_frac);
    rc.data.split.val_frac = d.real("val_frac", rc.data.split.val_frac);
    rc.data.split.test_frac = d.real("test_frac", rc.data.split.test_frac);

    const Extractor t(raw, "train");
    rc.train.seed = t.u64("seed", rc.train.seed);
    rc.train.step_size = t.real("step_size", rc.train.step_size);
    rc.train.epochs = t.integer("epochs", rc.train.epochs);
    rc.train.steps = t.integer("steps", rc.train.steps);
    rc.train.batch = t.integer("batch", rc.train.batch);
    rc.train.freeze_backbone = t.boolean("freeze_backbone", rc.train.freeze_backbone);
    rc.train.weight_decay = t.real("weight_decay", rc.train.weight_decay);
    rc.train.log_every = t.integer("log_every", rc.train.log_every);

    const Extractor o(raw, "output");
    rc.out_dir = o.str("dir", rc.out_dir);
    if (const char* env = std::getenv("CSF_OUT_DIR"); env && *env) rc.out_dir = env;

    rc.validate();
    return rc;
}

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides) {
    RawConfig raw = parse_ini_file(path);
    apply_overrides(raw, overrides);
    return run_config_from_raw(raw);
}

void RunConfig::validate() const {
    model.validate();
    if (data.kind != "synthetic" && data.kind != "ett-csv" && data.kind != "ucr")
        throw ConfigError("data.kind must be synthetic | ett-csv | ucr");
    if (data.kind != "synthetic" || data.synth_kind != "classes") {
        if (data.min_len < model.patching.patch_len)
            throw ConfigError("data.min_len must be >= model.patch_len");
        if (data.max_len > model.patching.max_len)
            throw ConfigError("data.max_len must be <= model.max_len");
        if (data.min_len > data.max_len) throw ConfigError("data.min_len must be <= data.max_len");
    }
    if (data.horizon < 1) throw ConfigError("data.horizon must be >= 1");
    if (data.classes < 2) throw ConfigError("data.classes must be >= 2");
    if (data.count < 1) throw ConfigError("data.count must be >= 1");
    if (data.noise < 0.0) throw ConfigError("data.noise must be >= 0");
    data.split.validate();
    if (train.step_size <= 0.0) throw ConfigError("train.step_size must be > 0");
    if (train.epochs < 0 || train.steps < 0) throw ConfigError("train.epochs/steps must be >= 0");
    if (train.batch < 1) throw ConfigError("train.batch must be >= 1");
    if (train.weight_decay < 0.0) throw ConfigError("train.weight_decay must be >= 0");
    if (out_dir.empty()) throw ConfigError("output.dir must not be empty");
}

std::string RunConfig::model_echo() const {
    std::ostringstream os;
    os << "base_dim=" << model.patching.base_dim << "\n"
       << "d_ff=" << model.ff_dim << "\n"
       << "encoder_depth=" << model.encoder_depth << "\n"
       << "heads=" << model.num_heads << "\n"
       << "max_len=" << model.patching.max_len << "\n"
       << "patch_len=" << model.patching.patch_len << "\n"
       << "repatch_len=" << model.patching.repatch_len << "\n"
       << "stride=" << model.patching.stride << "\n";
    return os.str();
}

}  // namespace csf
