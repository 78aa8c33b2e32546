#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cqnls/evolution.hpp"
#include "cqnls/ground_state.hpp"
#include "cqnls/linearized.hpp"

// Flat key=value configuration with CLI overrides, JSON emission at fixed
// 17-significant-digit formatting, CSV writers for the trajectory and
// modulation schemas, and a bit-exact checkpoint format (JSON header plus
// hex-encoded little-endian doubles).

namespace cqnls {

class Config {
public:
    Config() = default;
    static Config from_file(const std::string& path); // missing -> MissingArtifactError
    void apply_override(const std::string& key_eq_value);

    void set(const std::string& k, const std::string& v) { kv_[k] = v; }
    bool has(const std::string& k) const { return kv_.count(k) > 0; }
    std::string get(const std::string& k, const std::string& dflt) const;
    double get_double(const std::string& k, double dflt) const;
    long get_long(const std::string& k, long dflt) const;
    bool get_bool(const std::string& k, bool dflt) const;

    std::string printed() const; // sorted key=value lines

private:
    std::map<std::string, std::string> kv_;
};

// fixed-format floating point for reproducible files
std::string fmt17(double x);
std::string fmt9(double x);

// minimal JSON writer (objects, arrays, numbers at 17 digits, strings)
class JsonWriter {
public:
    JsonWriter& begin_object();
    JsonWriter& end_object();
    JsonWriter& begin_array(const std::string& key = "");
    JsonWriter& end_array();
    JsonWriter& field(const std::string& key, double v);
    JsonWriter& field(const std::string& key, long v);
    JsonWriter& field(const std::string& key, int v) { return field(key, (long)v); }
    JsonWriter& field(const std::string& key, std::size_t v) { return field(key, (long)v); }
    JsonWriter& field(const std::string& key, const std::string& v);
    JsonWriter& field(const std::string& key, const char* v) { return field(key, std::string(v)); }
    JsonWriter& field_bool(const std::string& key, bool v);
    JsonWriter& element(double v);
    JsonWriter& raw_field(const std::string& key, const std::string& raw);
    std::string str() const { return out_; }

private:
    void comma();
    std::string out_;
    std::vector<bool> first_;
};

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path); // missing -> MissingArtifactError

// hex encoding of the raw little-endian bytes of a double array
std::string doubles_to_hex(std::span<const double> xs);
std::vector<double> hex_to_doubles(const std::string& hex);

// checkpoint: grid + omega + t + field samples, bit exact round trip
void write_checkpoint(const std::string& path, const RadialField& psi, double omega,
                      double t);
struct Checkpoint {
    GridPtr grid;
    RadialField psi;
    double omega = 0;
    double t = 0;
};
Checkpoint read_checkpoint(const std::string& path);

// ground-state fixture: the spec'd summary keys plus enough to rebuild the
// grid field without re-shooting
void write_ground_state_fixture(const std::string& path, const GroundState& gs);
GroundState read_ground_state_fixture(const std::string& path, const GroundStateConfig& cfg = {});

void write_spectrum_fixture(const std::string& path, double omega,
                            const InternalMode& m);

// trajectory CSV, one row per record:
// t,mass,energy,K,grad_sq,l4_4,l6_6,variance,momentum,y_R,y_R_prime,A_R,d_omega,verdict
void write_trajectory_csv(const std::string& path, const TrajectoryRecord& tr);

// modulation CSV:
// t,theta,lambda_plus,lambda_minus,lambda1,lambda2,b,gamma_h1,energy_norm,d_omega
void write_modulation_csv(const std::string& path,
                          const std::vector<ModulationState>& states);

std::string output_root(); // $CQNLS_OUT or "."
std::string join_path(const std::string& dir, const std::string& name);

} // namespace cqnls
