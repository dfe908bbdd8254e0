#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "ghlab/cli.hpp"
#include "ghlab/diophantine.hpp"

namespace ghlab::cli {

namespace {

using nlohmann::json;

std::string child(const std::string& ptr, const std::string& key) {
    std::string k;
    for (char ch : key) {
        if (ch == '~') k += "~0";
        else if (ch == '/') k += "~1";
        else k += ch;
    }
    return ptr + "/" + k;
}

std::string child(const std::string& ptr, std::size_t i) { return ptr + "/" + std::to_string(i); }

const json& expect_object(const json& j, const std::string& ptr, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(ptr.empty() ? "/" : ptr, "expected an object");
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items()) {
        if (!keys.count(k)) throw ConfigError(child(ptr, k), "unknown key");
    }
    return j;
}

double number(const json& j, const std::string& ptr) {
    if (!j.is_number()) throw ConfigError(ptr, "expected a number");
    const double x = j.get<double>();
    if (!std::isfinite(x)) throw ConfigError(ptr, "expected a finite number");
    return x;
}

double positive(const json& j, const std::string& ptr) {
    const double x = number(j, ptr);
    if (x <= 0) throw ConfigError(ptr, "expected a positive number");
    return x;
}

long long integer(const json& j, const std::string& ptr, long long lo) {
    if (!j.is_number_integer()) throw ConfigError(ptr, "expected an integer");
    const long long x = j.get<long long>();
    if (x < lo) throw ConfigError(ptr, "expected an integer >= " + std::to_string(lo));
    return x;
}

std::string string(const json& j, const std::string& ptr) {
    if (!j.is_string()) throw ConfigError(ptr, "expected a string");
    return j.get<std::string>();
}

template <class F>
void optional(const json& obj, const char* key, const std::string& ptr, F&& read) {
    if (obj.contains(key)) read(obj.at(key), child(ptr, key));
}

std::shared_ptr<const EigenvalueSequence> parse_spectrum(const json& j, const std::string& ptr, std::size_t J) {
    expect_object(j, ptr, {"weyl", "values", "kernel_dim"});
    if (j.contains("weyl") == j.contains("values")) throw ConfigError(ptr, "expected exactly one of weyl, values");
    try {
        if (j.contains("weyl")) {
            const std::string wp = child(ptr, "weyl");
            const auto& w = expect_object(j.at("weyl"), wp, {"m", "mu", "d", "scale"});
            WeylModel model;
            optional(w, "m", wp, [&](const json& v, const std::string& p) { model.m = positive(v, p); });
            optional(w, "mu", wp, [&](const json& v, const std::string& p) { model.mu = positive(v, p); });
            optional(w, "d", wp, [&](const json& v, const std::string& p) { model.d = int(integer(v, p, 1)); });
            optional(w, "scale", wp, [&](const json& v, const std::string& p) { model.scale = positive(v, p); });
            if (J < 2) throw ConfigError("/truncation/J", "the Weyl model needs J >= 2");
            return std::make_shared<const EigenvalueSequence>(generate_weyl(model, J));
        }
        const std::string vp = child(ptr, "values");
        const auto& arr = j.at("values");
        if (!arr.is_array() || arr.empty()) throw ConfigError(vp, "expected a nonempty array");
        std::vector<double> values;
        for (std::size_t i = 0; i < arr.size(); ++i) values.push_back(number(arr[i], child(vp, i)));
        std::size_t kernel = 0;
        optional(j, "kernel_dim", ptr, [&](const json& v, const std::string& p) { kernel = integer(v, p, 0); });
        if (J > values.size()) throw ConfigError("/truncation/J", "exceeds the number of listed eigenvalues");
        auto seq = EigenvalueSequence::from_values(std::move(values), kernel);
        return std::make_shared<const EigenvalueSequence>(J ? seq.truncated(J) : seq);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(ptr, e.what());
    }
}

}  // namespace

PeriodicFunction function_literal(const json& j, const std::string& ptr) {
    if (j.is_number()) return PeriodicFunction::constant(number(j, ptr));
    if (j.is_object()) {
        expect_object(j, ptr, {"re", "im"});
        double re = 0, im = 0;
        optional(j, "re", ptr, [&](const json& v, const std::string& p) { re = number(v, p); });
        optional(j, "im", ptr, [&](const json& v, const std::string& p) { im = number(v, p); });
        return PeriodicFunction::constant(cplx(re, im));
    }
    if (!j.is_array()) throw ConfigError(ptr, "expected a function literal (number, {re, im} or list of terms)");
    std::vector<TrigTerm> terms;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string tp = child(ptr, i);
        const auto& t = expect_object(j[i], tp, {"type", "freq", "amp", "re", "im"});
        if (!t.contains("type")) throw ConfigError(tp, "missing key type");
        const std::string type = string(t.at("type"), child(tp, "type"));
        int freq = 0;
        double amp = 1, re = 0, im = 0;
        optional(t, "freq", tp, [&](const json& v, const std::string& p) {
            if (!v.is_number_integer()) throw ConfigError(p, "expected an integer");
            freq = v.get<int>();
        });
        optional(t, "amp", tp, [&](const json& v, const std::string& p) { amp = number(v, p); });
        optional(t, "re", tp, [&](const json& v, const std::string& p) { re = number(v, p); });
        optional(t, "im", tp, [&](const json& v, const std::string& p) { im = number(v, p); });
        if (type == "const") {
            terms.push_back({0, t.contains("amp") ? cplx(amp) : cplx(re, im)});
        } else if (type == "cos" || type == "sin") {
            if (freq == 0) throw ConfigError(child(tp, "freq"), "expected a nonzero frequency");
            const auto f = type == "cos" ? PeriodicFunction::cosine(freq, amp) : PeriodicFunction::sine(freq, amp);
            terms.insert(terms.end(), f.terms().begin(), f.terms().end());
        } else if (type == "exp") {
            terms.push_back({freq, t.contains("amp") ? cplx(amp) : cplx(re, im)});
        } else {
            throw ConfigError(child(tp, "type"), "unknown term type '" + type + "'");
        }
    }
    return PeriodicFunction::trig(std::move(terms));
}

void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("/", "override '" + assignment + "' is not key=value");
    const std::string path = assignment.substr(0, eq), text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    json* node = &doc;
    std::string ptr;
    std::size_t pos = 0;
    while (true) {
        const auto dot = path.find('.', pos);
        const std::string key = path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        if (key.empty()) throw ConfigError(ptr.empty() ? "/" : ptr, "empty segment in override '" + path + "'");
        if (node->is_null()) *node = json::object();
        json* next = nullptr;
        if (node->is_array()) {
            std::size_t idx = 0;
            auto [end, ec] = std::from_chars(key.data(), key.data() + key.size(), idx);
            if (ec != std::errc() || end != key.data() + key.size() || idx >= node->size())
                throw ConfigError(child(ptr, key), "not an index of the array");
            next = &(*node)[idx];
        } else if (node->is_object()) {
            next = &(*node)[key];
        } else {
            throw ConfigError(ptr, "cannot descend into a scalar");
        }
        ptr = child(ptr, key);
        node = next;
        if (dot == std::string::npos) break;
        pos = dot + 1;
    }
    *node = std::move(value);
}

ExperimentConfig parse_config(const json& doc) {
    expect_object(doc, "", {"command", "spectrum", "operator", "data", "truncation", "numeric", "classify", "outputs"});
    ExperimentConfig cfg;
    cfg.raw = doc;

    optional(doc, "command", "", [&](const json& v, const std::string& p) {
        cfg.command = string(v, p);
        if (std::find(kCommands.begin(), kCommands.end(), cfg.command) == kCommands.end())
            throw ConfigError(p, "unknown command '" + cfg.command + "'");
    });

    if (!doc.contains("truncation")) throw ConfigError("/truncation", "missing section");
    {
        const auto& t = expect_object(doc.at("truncation"), "/truncation", {"J", "M_max", "gamma_max"});
        if (!t.contains("J")) throw ConfigError("/truncation/J", "missing key");
        cfg.truncation.J = integer(t.at("J"), "/truncation/J", 1);
        optional(t, "M_max", "/truncation", [&](const json& v, const std::string& p) { cfg.truncation.M_max = int(integer(v, p, 0)); });
        optional(t, "gamma_max", "/truncation", [&](const json& v, const std::string& p) { cfg.truncation.gamma_max = int(integer(v, p, 0)); });
    }

    optional(doc, "numeric", "", [&](const json& n, const std::string& np) {
        expect_object(n, np, {"panels", "residual_tol", "resonance_tol", "digits", "density", "epsilons", "threads"});
        auto& num = cfg.numeric;
        optional(n, "panels", np, [&](const json& v, const std::string& p) { num.panels = int(integer(v, p, 1)); });
        optional(n, "residual_tol", np, [&](const json& v, const std::string& p) { num.residual_tol = positive(v, p); });
        optional(n, "resonance_tol", np, [&](const json& v, const std::string& p) { num.resonance_tol = positive(v, p); });
        optional(n, "digits", np, [&](const json& v, const std::string& p) { num.digits = unsigned(integer(v, p, 0)); });
        optional(n, "density", np, [&](const json& v, const std::string& p) { num.density = integer(v, p, 16); });
        optional(n, "threads", np, [&](const json& v, const std::string& p) { num.threads = unsigned(integer(v, p, 0)); });
        optional(n, "epsilons", np, [&](const json& v, const std::string& p) {
            if (!v.is_array() || v.empty()) throw ConfigError(p, "expected a nonempty array");
            num.epsilons.clear();
            for (std::size_t i = 0; i < v.size(); ++i) num.epsilons.push_back(positive(v[i], child(p, i)));
        });
    });

    if (!doc.contains("spectrum")) throw ConfigError("/spectrum", "missing section");
    cfg.spectrum = parse_spectrum(doc.at("spectrum"), "/spectrum", cfg.truncation.J);
    cfg.truncation.J = cfg.spectrum->size();

    optional(doc, "operator", "", [&](const json& o, const std::string& op) {
        expect_object(o, op, {"omega", "c"});
        if (o.contains("omega") == o.contains("c")) throw ConfigError(op, "expected exactly one of omega, c");
        if (o.contains("omega")) {
            const std::string wp = child(op, "omega");
            const auto& w = expect_object(o.at("omega"), wp, {"alpha", "beta"});
            double alpha = 0, beta = 0;
            std::string expr;
            optional(w, "alpha", wp, [&](const json& v, const std::string& p) {
                if (v.is_string()) {
                    expr = v.get<std::string>();
                    try {
                        alpha = Alpha::parse(expr).approx();
                    } catch (const Error& e) {
                        throw ConfigError(p, e.what());
                    }
                } else {
                    alpha = number(v, p);
                }
            });
            optional(w, "beta", wp, [&](const json& v, const std::string& p) { beta = number(v, p); });
            cfg.op = std::make_unique<OperatorSpec>(cplx(alpha, beta), cfg.spectrum, expr);
        } else {
            const std::string cp = child(op, "c");
            const auto& c = expect_object(o.at("c"), cp, {"a", "b"});
            PeriodicFunction a = PeriodicFunction::constant(0.0), b = PeriodicFunction::constant(0.0);
            optional(c, "a", cp, [&](const json& v, const std::string& p) { a = function_literal(v, p); });
            optional(c, "b", cp, [&](const json& v, const std::string& p) { b = function_literal(v, p); });
            for (const auto& [f, key] : {std::pair{&a, "a"}, std::pair{&b, "b"}}) {
                const auto im = f->imag_part().terms();
                if (std::any_of(im.begin(), im.end(), [](const TrigTerm& t) { return std::abs(t.coef) > 1e-14; }))
                    throw ConfigError(child(cp, key), "expected a real function");
            }
            cfg.op = std::make_unique<OperatorSpec>(a + b * cplx(0, 1), cfg.spectrum);
        }
    });

    optional(doc, "data", "", [&](const json& d, const std::string& dp) {
        expect_object(d, dp, {"generator", "rate", "power", "freq", "profile"});
        if (!d.contains("generator")) throw ConfigError(child(dp, "generator"), "missing key");
        auto& data = cfg.data;
        data.generator = string(d.at("generator"), child(dp, "generator"));
        static const std::set<std::string> known = {"exp_decay", "power_decay", "exp_decay_fourier", "resonance_aligned"};
        if (!known.count(data.generator)) throw ConfigError(child(dp, "generator"), "unknown generator '" + data.generator + "'");
        optional(d, "rate", dp, [&](const json& v, const std::string& p) { data.rate = positive(v, p); });
        optional(d, "power", dp, [&](const json& v, const std::string& p) { data.power = number(v, p); });
        optional(d, "freq", dp, [&](const json& v, const std::string& p) {
            if (!v.is_number_integer()) throw ConfigError(p, "expected an integer");
            data.freq = v.get<int>();
        });
        optional(d, "profile", dp, [&](const json& v, const std::string& p) { data.profile = function_literal(v, p); });
        if (data.generator == "resonance_aligned" && !(cfg.op && cfg.op->is_constant()))
            throw ConfigError(child(dp, "generator"), "resonance_aligned needs a constant operator");
    });

    optional(doc, "classify", "", [&](const json& c, const std::string& cp) {
        expect_object(c, cp, {"target"});
        optional(c, "target", cp, [&](const json& v, const std::string& p) {
            cfg.classify_target = string(v, p);
            if (cfg.classify_target != "data" && cfg.classify_target != "solution")
                throw ConfigError(p, "expected 'data' or 'solution'");
        });
    });

    optional(doc, "outputs", "", [&](const json& o, const std::string& op) {
        expect_object(o, op, {"dir"});
        optional(o, "dir", op, [&](const json& v, const std::string& p) { cfg.out_dir = string(v, p); });
    });
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides,
                             const std::string& out_dir, int precision) {
    std::ifstream in(path);
    if (!in) throw ConfigError("/", "cannot open config '" + path.string() + "'");
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ConfigError("/", "config '" + path.string() + "' is not valid JSON");
    for (const auto& o : overrides) apply_override(doc, o);
    if (!out_dir.empty()) doc["outputs"]["dir"] = out_dir;
    if (precision >= 0) doc["numeric"]["digits"] = precision;
    return parse_config(doc);
}

std::string config_hash(const json& doc) {
    json copy = doc;
    if (copy.is_object()) copy.erase("outputs");
    const std::string text = copy.dump();
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

CoefficientField make_data(const ExperimentConfig& cfg) {
    const auto& d = cfg.data;
    if (d.generator.empty()) throw ConfigError("/data", "missing section");
    const std::size_t J = cfg.truncation.J;
    if (d.generator == "exp_decay") {
        return CoefficientField::generate(cfg.spectrum, J, [&](std::size_t, double l) {
            return d.profile * cplx(std::exp(-d.rate * l));
        });
    }
    if (d.generator == "power_decay") {
        return CoefficientField::generate(cfg.spectrum, J, [&](std::size_t, double l) {
            return d.profile * cplx(std::pow(l > 0 ? l : 1.0, -d.power));
        });
    }
    if (d.generator == "exp_decay_fourier") {
        return CoefficientField::generate(cfg.spectrum, J, [&](std::size_t j, double) {
            return PeriodicFunction::exponential(d.freq * static_cast<int>(j), std::exp(-d.rate * double(j)));
        });
    }
    // resonance_aligned: the frequency tau nearest to -alpha lambda_j carries the smallest divisor.
    const double alpha = cfg.op->constant().omega.real();
    return CoefficientField::generate(cfg.spectrum, J, [&](std::size_t, double l) {
        return PeriodicFunction::exponential(-static_cast<int>(std::lround(alpha * l)), std::exp(-d.rate * l));
    });
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Usage:
        case ErrorKind::InvalidModel:
        case ErrorKind::InvalidArgument:
        case ErrorKind::InvalidSupport:
        case ErrorKind::InconsistentKernel:
            return kUsage;
        case ErrorKind::Verification:
            return kVerification;
        default:
            return kNumeric;
    }
}

}  // namespace ghlab::cli
