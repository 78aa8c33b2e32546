#include "cqnls/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cqnls {

Config Config::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifactError("config file not found: " + path);
    Config c;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string k = trim(line.substr(0, eq));
        const std::string v = trim(line.substr(eq + 1));
        if (!k.empty()) c.kv_[k] = v;
    }
    return c;
}

void Config::apply_override(const std::string& kev) {
    const auto eq = kev.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override must look like key=value: " + kev);
    kv_[kev.substr(0, eq)] = kev.substr(eq + 1);
}

std::string Config::get(const std::string& k, const std::string& dflt) const {
    const auto it = kv_.find(k);
    return it == kv_.end() ? dflt : it->second;
}

double Config::get_double(const std::string& k, double dflt) const {
    const auto it = kv_.find(k);
    if (it == kv_.end()) return dflt;
    try {
        return std::stod(it->second);
    } catch (...) {
        throw ConfigError("bad numeric value for " + k + ": " + it->second);
    }
}

long Config::get_long(const std::string& k, long dflt) const {
    const auto it = kv_.find(k);
    if (it == kv_.end()) return dflt;
    try {
        return std::stol(it->second);
    } catch (...) {
        throw ConfigError("bad integer value for " + k + ": " + it->second);
    }
}

bool Config::get_bool(const std::string& k, bool dflt) const {
    const auto it = kv_.find(k);
    if (it == kv_.end()) return dflt;
    const std::string& v = it->second;
    if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "off" || v == "no") return false;
    throw ConfigError("bad boolean value for " + k + ": " + v);
}

std::string Config::printed() const {
    std::string out;
    for (const auto& [k, v] : kv_) out += k + "=" + v + "\n";
    return out;
}

std::string fmt17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string fmt9(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

// ---- JSON writer ----

void JsonWriter::comma() {
    if (!first_.empty()) {
        if (!first_.back()) out_ += ",";
        first_.back() = false;
    }
}

JsonWriter& JsonWriter::begin_object() {
    comma();
    out_ += "{";
    first_.push_back(true);
    return *this;
}

JsonWriter& JsonWriter::end_object() {
    out_ += "}";
    first_.pop_back();
    return *this;
}

JsonWriter& JsonWriter::begin_array(const std::string& key) {
    comma();
    if (!key.empty()) out_ += "\"" + key + "\":";
    out_ += "[";
    first_.push_back(true);
    return *this;
}

JsonWriter& JsonWriter::end_array() {
    out_ += "]";
    first_.pop_back();
    return *this;
}

JsonWriter& JsonWriter::field(const std::string& key, double v) {
    comma();
    out_ += "\"" + key + "\":" + fmt17(v);
    return *this;
}

JsonWriter& JsonWriter::field(const std::string& key, long v) {
    comma();
    out_ += "\"" + key + "\":" + std::to_string(v);
    return *this;
}

JsonWriter& JsonWriter::field(const std::string& key, const std::string& v) {
    comma();
    out_ += "\"" + key + "\":\"" + v + "\"";
    return *this;
}

JsonWriter& JsonWriter::field_bool(const std::string& key, bool v) {
    comma();
    out_ += "\"" + key + "\":" + (v ? "true" : "false");
    return *this;
}

JsonWriter& JsonWriter::element(double v) {
    comma();
    out_ += fmt17(v);
    return *this;
}

JsonWriter& JsonWriter::raw_field(const std::string& key, const std::string& raw) {
    comma();
    out_ += "\"" + key + "\":" + raw;
    return *this;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot open for writing: " + path);
    out << content;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifactError("file not found: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string doubles_to_hex(std::span<const double> xs) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(xs.size() * 16);
    for (double x : xs) {
        unsigned char bytes[8];
        std::memcpy(bytes, &x, 8);
        for (int b = 0; b < 8; ++b) {
            out += digits[bytes[b] >> 4];
            out += digits[bytes[b] & 0xf];
        }
    }
    return out;
}

std::vector<double> hex_to_doubles(const std::string& hex) {
    if (hex.size() % 16 != 0) throw InputError("hex field length not multiple of 16");
    auto nibble = [](char c) -> unsigned {
        if (c >= '0' && c <= '9') return (unsigned)(c - '0');
        if (c >= 'a' && c <= 'f') return (unsigned)(c - 'a' + 10);
        if (c >= 'A' && c <= 'F') return (unsigned)(c - 'A' + 10);
        throw InputError("bad hex digit");
    };
    std::vector<double> out(hex.size() / 16);
    for (std::size_t i = 0; i < out.size(); ++i) {
        unsigned char bytes[8];
        for (int b = 0; b < 8; ++b)
            bytes[b] = (unsigned char)((nibble(hex[i * 16 + 2 * b]) << 4) |
                                       nibble(hex[i * 16 + 2 * b + 1]));
        std::memcpy(&out[i], bytes, 8);
    }
    return out;
}

void write_checkpoint(const std::string& path, const RadialField& psi, double omega,
                      double t) {
    std::vector<double> flat(2 * psi.size());
    for (std::size_t i = 0; i < psi.size(); ++i) {
        flat[2 * i] = psi[i].real();
        flat[2 * i + 1] = psi[i].imag();
    }
    JsonWriter w;
    w.begin_object()
        .field("r_max", psi.grid()->r_max())
        .field("n", (long)psi.grid()->n())
        .field("omega", omega)
        .field("t", t)
        .field("samples_hex", doubles_to_hex(flat))
        .end_object();
    write_text_file(path, w.str() + "\n");
}

Checkpoint read_checkpoint(const std::string& path) {
    const auto j = nlohmann::json::parse(read_text_file(path));
    Checkpoint c;
    c.grid = build_grid(j.at("r_max").get<double>(), j.at("n").get<std::size_t>());
    c.omega = j.at("omega").get<double>();
    c.t = j.at("t").get<double>();
    const std::vector<double> flat = hex_to_doubles(j.at("samples_hex").get<std::string>());
    if (flat.size() != 2 * c.grid->n())
        throw InputError("checkpoint: sample count mismatch");
    std::vector<cplx> s(c.grid->n());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = cplx(flat[2 * i], flat[2 * i + 1]);
    c.psi = RadialField(c.grid, std::move(s));
    return c;
}

void write_ground_state_fixture(const std::string& path, const GroundState& gs) {
    JsonWriter w;
    w.begin_object()
        .field("omega", gs.omega)
        .field("q0", gs.q0)
        .field("mass", gs.values.mass)
        .field("energy", gs.values.energy)
        .field("residual", gs.residual)
        .field("K", gs.values.K)
        .field("action", gs.values.action)
        .field("mode", gs.mode == Nonlinearity::cubic_quintic ? "cubic-quintic" : "cubic-only")
        .field("r_max", gs.Q.grid()->r_max())
        .field("n", (long)gs.Q.grid()->n())
        .field("samples_hex", doubles_to_hex(gs.Q.real_part()))
        .end_object();
    write_text_file(path, w.str() + "\n");
}

GroundState read_ground_state_fixture(const std::string& path,
                                      const GroundStateConfig& cfg) {
    const auto j = nlohmann::json::parse(read_text_file(path));
    GroundState gs;
    gs.omega = j.at("omega").get<double>();
    gs.q0 = j.at("q0").get<double>();
    gs.residual = j.at("residual").get<double>();
    gs.mode = j.at("mode").get<std::string>() == "cubic-only" ? Nonlinearity::cubic_only
                                                              : Nonlinearity::cubic_quintic;
    GridPtr grid = build_grid(j.at("r_max").get<double>(), j.at("n").get<std::size_t>());
    std::vector<double> q = hex_to_doubles(j.at("samples_hex").get<std::string>());
    if (q.size() != grid->n()) throw InputError("ground-state fixture: size mismatch");
    newton_polish(q, *grid, gs.omega, gs.mode, cfg.newton_tol, cfg.newton_max_iter);
    gs.Q = RadialField(grid, q);
    gs.grid_values = evaluate(gs.Q, gs.omega);
    FunctionalValues v;
    v.omega = gs.omega;
    v.mass = j.at("mass").get<double>();
    v.energy = j.at("energy").get<double>();
    v.K = j.at("K").get<double>();
    v.action = j.at("action").get<double>();
    v.J = v.action - 0.5 * v.K;
    gs.values = v;
    return gs;
}

void write_spectrum_fixture(const std::string& path, double omega,
                            const InternalMode& m) {
    JsonWriter w;
    w.begin_object()
        .field("omega", omega)
        .field("e_omega", m.e_omega)
        .field("residual_plus", m.residual_plus)
        .field("residual_minus", m.residual_minus)
        .field("pairing", m.pairing)
        .field("signQ2", m.signQ2)
        .end_object();
    write_text_file(path, w.str() + "\n");
}

void write_trajectory_csv(const std::string& path, const TrajectoryRecord& tr) {
    std::string out =
        "t,mass,energy,K,grad_sq,l4_4,l6_6,variance,momentum,y_R,y_R_prime,A_R,"
        "d_omega,verdict\n";
    for (std::size_t i = 0; i < tr.rows.size(); ++i) {
        const Diagnostics& d = tr.rows[i];
        const bool last = i + 1 == tr.rows.size();
        out += fmt17(d.t) + "," + fmt17(d.mass) + "," + fmt17(d.energy) + "," +
               fmt17(d.K) + "," + fmt17(d.grad_sq) + "," + fmt17(d.l4_4) + "," +
               fmt17(d.l6_6) + "," + fmt17(d.variance) + "," + fmt17(d.momentum) +
               "," + fmt17(d.y_R) + "," + fmt17(d.y_R_prime) + "," + fmt17(d.A_R) +
               "," + fmt17(d.d_omega) + "," +
               (last ? to_string(tr.verdict) : "Running") + "\n";
    }
    write_text_file(path, out);
}

void write_modulation_csv(const std::string& path,
                          const std::vector<ModulationState>& states) {
    std::string out =
        "t,theta,lambda_plus,lambda_minus,lambda1,lambda2,b,gamma_h1,"
        "energy_norm,d_omega\n";
    for (const auto& s : states) {
        out += fmt17(s.t) + "," + fmt17(s.theta) + "," + fmt17(s.lambda_plus) + "," +
               fmt17(s.lambda_minus) + "," + fmt17(s.lambda1) + "," +
               fmt17(s.lambda2) + "," + fmt17(s.b) + "," + fmt17(h1_norm(s.Gamma)) +
               "," + fmt17(s.energy_norm) + "," + fmt17(s.d_omega) + "\n";
    }
    write_text_file(path, out);
}

std::string output_root() {
    const char* env = std::getenv("CQNLS_OUT");
    return env && *env ? env : ".";
}

std::string join_path(const std::string& dir, const std::string& name) {
    if (dir.empty() || dir == ".") return name;
    return dir.back() == '/' ? dir + name : dir + "/" + name;
}

} // namespace cqnls
