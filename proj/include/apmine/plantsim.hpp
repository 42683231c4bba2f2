#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "apmine/binarize.hpp"
#include "apmine/historian.hpp"
#include "apmine/rules.hpp"

namespace apmine {

// Deterministic discrete-time model of a simplified six-stage water
// treatment line. Stage 1 stores raw water (T101), stage 2 doses chemicals
// into the transfer line, stage 3 ultrafilters from the UF feed tank (T301)
// into the RO feed tank (T401), stages 5/6 draw product water and store
// backwash water (T601). Valves and pumps carry the SWaT-style tag names
// used across the toolkit.

constexpr std::size_t kTanks = 4;  // T101, T301, T401, T601
constexpr std::size_t kValves = 6; // MV101, MV201, MV301, MV302, MV303, MV304
constexpr std::size_t kPumps = 5;  // P101, P203, P205, P302, P602
constexpr std::size_t kFlows = 4;  // FIT101, FIT201, FIT301, FIT601

inline const std::array<const char*, kTanks>& tank_names() {
    static const std::array<const char*, kTanks> n{"T101", "T301", "T401", "T601"};
    return n;
}
inline const std::array<const char*, kTanks>& level_sensor_names() {
    static const std::array<const char*, kTanks> n{"LIT101", "LIT301", "LIT401", "LIT601"};
    return n;
}
inline const std::array<const char*, kValves>& valve_names() {
    static const std::array<const char*, kValves> n{"MV101", "MV201", "MV301",
                                                    "MV302", "MV303", "MV304"};
    return n;
}
inline const std::array<const char*, kPumps>& pump_names() {
    static const std::array<const char*, kPumps> n{"P101", "P203", "P205", "P302", "P602"};
    return n;
}
inline const std::array<const char*, kFlows>& flow_names() {
    static const std::array<const char*, kFlows> n{"FIT101", "FIT201", "FIT301", "FIT601"};
    return n;
}

enum : std::size_t { T101 = 0, T301 = 1, T401 = 2, T601 = 3 };
enum : std::size_t { MV101 = 0, MV201 = 1, MV301 = 2, MV302 = 3, MV303 = 4, MV304 = 5 };
enum : std::size_t { P101 = 0, P203 = 1, P205 = 2, P302 = 3, P602 = 4 };
enum : std::size_t { FIT101 = 0, FIT201 = 1, FIT301 = 2, FIT601 = 3 };

struct TankThresholds {
    double low_low, low, high, high_high; // mm
};

struct PlantParams {
    std::int64_t dt = 1; // s

    std::array<double, kTanks> tank_area = {1.0, 1.2, 1.0, 0.8}; // m²
    double inlet_rate = 3.5;                                     // m³/h through MV101
    double p101_rate = 2.5;                                      // stage 1 -> 2 transfer
    double p302_rate = 2.2;                                      // UF feed line
    double ro_draw_rate = 1.6;                                   // RO consumption from T401
    double ro_recycle_frac = 0.45;                               // product share stored in T601
    double p602_rate = 3.0;                                      // backwash

    std::array<TankThresholds, kTanks> levels = {{{250, 500, 800, 1000},
                                                  {250, 500, 800, 1000},
                                                  {250, 500, 800, 1000},
                                                  {250, 500, 800, 1000}}};
    double tank_brim_mm = 1400; // physical ceiling; water spills past this

    // chemical proxies (stage 2 dosing)
    double orp_setpoint = 350, orp_band_low = 250, orp_band_high = 450; // mV
    double ph_setpoint = 7.2, ph_band_low = 6.8, ph_band_high = 7.6;
    double orp_dose_rate = 1.0, orp_relax_rate = 0.5;    // mV/s
    double ph_dose_rate = 0.005, ph_relax_rate = 0.0025; // pH/s

    // UF backwash/flush schedule
    std::int64_t backwash_offset = 1800;
    std::int64_t backwash_period = 3600;
    std::int64_t backwash_duration = 120;
    std::int64_t flush_duration = 60;

    double flow_threshold = 0.5;    // flow-presence threshold (m³/h)
    double spoofed_flow_value = 2.0; // measured value reported for a forced FlowHigh
    double noise_amplitude = 0.02;  // RO demand noise fraction

    std::int64_t settle_time = 300;    // max s to establish an attack prefix
    std::int64_t cooldown = 120;       // s recorded after an attack window
    std::int64_t starvation_hold = 60; // s of dry demand before flagging

    // When set, MV101/MV201 commands latch on level crossings the way a PLC
    // output coil does: a state written from outside persists until the
    // level next crosses a threshold. When false they follow plain
    // level-triggered hysteresis and re-assert every scan.
    bool latched_control = true;
};

inline void validate_params(const PlantParams& p) {
    if (p.dt <= 0) throw ConfigError("plant dt must be positive");
    for (std::size_t t = 0; t < kTanks; ++t) {
        const auto& th = p.levels[t];
        if (!(th.low_low < th.low && th.low < th.high && th.high < th.high_high))
            throw ConfigError(std::string("tank ") + tank_names()[t] +
                              ": thresholds must satisfy LowLow < Low < High < HighHigh");
        if (p.tank_area[t] <= 0) throw ConfigError("tank area must be positive");
    }
    if (p.backwash_period <= p.backwash_duration + p.flush_duration)
        throw ConfigError("backwash period shorter than backwash+flush");
}

namespace sim {

// splitmix64: tiny, seedable, identical on every platform.
struct Rng {
    std::uint64_t state = 0;
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

inline double quantize3(double v) { return static_cast<double>(std::llround(v * 1000.0)) / 1000.0; }

constexpr double kCmmPerM3hS = 100000.0 / 3600.0; // (m³/h * s / m²) -> 0.01 mm

} // namespace sim

struct ControlMemory {
    bool t401_demand = true;
    bool backwash_running = false;
    std::array<std::int64_t, kTanks> prev_level_cmm{};
};

struct PlantState {
    std::int64_t clock = 0;
    std::array<std::int64_t, kTanks> level_cmm{}; // 0.01 mm fixed point
    std::array<bool, kValves> valve_open{};
    std::array<bool, kPumps> pump_on{};
    std::array<double, kFlows> flow_measured{}; // recorded values (spoofable)
    std::array<double, kFlows> flow_actual{};
    std::array<double, kTanks> tank_in{}; // m³/h, diagnostics for mass checks
    std::array<double, kTanks> tank_out{};
    std::int64_t orp_milli = 0; // mV * 1000
    std::int64_t ph_micro = 0;  // pH * 1e6
    ControlMemory control;
    std::uint64_t rng_state = 0;

    double level_mm(std::size_t tank) const {
        return static_cast<double>(level_cmm[tank]) / 100.0;
    }
    double orp() const { return static_cast<double>(orp_milli) / 1000.0; }
    double ph() const { return static_cast<double>(ph_micro) / 1e6; }
};

inline PlantState initial_state(const PlantParams& params, std::uint64_t seed) {
    validate_params(params);
    PlantState s;
    s.level_cmm = {60000, 60000, 60000, 60000}; // 600 mm everywhere
    s.control.prev_level_cmm = s.level_cmm;
    s.valve_open[MV101] = true;
    s.valve_open[MV201] = true;
    s.valve_open[MV302] = true;
    s.pump_on[P101] = true;
    s.pump_on[P302] = true;
    s.orp_milli = static_cast<std::int64_t>(std::llround(params.orp_setpoint * 1000.0));
    s.ph_micro = static_cast<std::int64_t>(std::llround(params.ph_setpoint * 1e6));
    s.rng_state = seed * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull;
    s.control.t401_demand = true;
    return s;
}

// Hard overrides (attack writes) and operator commands (honored unless a
// protection interlock blocks them). Flow items spoof the measured value
// seen by the controller and the historian; physics keeps the real flow.
struct StepInputs {
    std::array<std::optional<bool>, kValves> force_valve{};
    std::array<std::optional<bool>, kPumps> force_pump{};
    std::array<std::optional<bool>, kFlows> force_flow_high{};
    std::array<std::optional<bool>, kValves> cmd_valve{};
    std::array<std::optional<bool>, kPumps> cmd_pump{};

    void add(const Item& item, bool as_command) {
        for (std::size_t v = 0; v < kValves; ++v)
            if (item.attribute == valve_names()[v]) {
                if (item.state != ItemState::Open && item.state != ItemState::Close)
                    throw ConfigError("valve " + item.attribute + " cannot take state " +
                                      to_string(item.state));
                (as_command ? cmd_valve[v] : force_valve[v]) = item.state == ItemState::Open;
                return;
            }
        for (std::size_t p = 0; p < kPumps; ++p)
            if (item.attribute == pump_names()[p]) {
                if (item.state != ItemState::On && item.state != ItemState::Off)
                    throw ConfigError("pump " + item.attribute + " cannot take state " +
                                      to_string(item.state));
                (as_command ? cmd_pump[p] : force_pump[p]) = item.state == ItemState::On;
                return;
            }
        for (std::size_t f = 0; f < kFlows; ++f)
            if (item.attribute == flow_names()[f]) {
                if (item.state != ItemState::FlowHigh && item.state != ItemState::FlowLow)
                    throw ConfigError("flow meter " + item.attribute + " cannot take state " +
                                      to_string(item.state));
                if (as_command)
                    throw ConfigError(item.attribute +
                                      " is a sensor; it cannot be commanded, only forced or waited on");
                force_flow_high[f] = item.state == ItemState::FlowHigh;
                return;
            }
        throw ConfigError("'" + item.attribute + "' is not a forceable plant attribute");
    }
};

inline StepInputs make_inputs(const std::vector<Item>& forced, const std::vector<Item>& commands = {}) {
    StepInputs in;
    for (const auto& it : forced) in.add(it, false);
    for (const auto& it : commands) in.add(it, true);
    return in;
}

// Whether a single item currently holds on the plant (applied actuator
// states; measured flows against the threshold).
inline bool state_item_holds(const PlantState& s, const Item& item, const PlantParams& params) {
    for (std::size_t v = 0; v < kValves; ++v)
        if (item.attribute == valve_names()[v])
            return s.valve_open[v] == (item.state == ItemState::Open);
    for (std::size_t p = 0; p < kPumps; ++p)
        if (item.attribute == pump_names()[p])
            return s.pump_on[p] == (item.state == ItemState::On);
    for (std::size_t f = 0; f < kFlows; ++f)
        if (item.attribute == flow_names()[f])
            return (s.flow_measured[f] >= params.flow_threshold) == (item.state == ItemState::FlowHigh);
    throw ConfigError("'" + item.attribute + "' is not a plant attribute");
}

// Advances the plant by one step: control scan, command/force overlay, flow
// resolution, mass-balance integration, chemical drift.
inline PlantState step(const PlantState& prev, const PlantParams& params,
                       const StepInputs& in = {}) {
    PlantState s = prev;
    s.clock = prev.clock + params.dt;

    const auto lvl = [&](std::size_t t) { return prev.level_mm(t); };
    const auto prev_lvl = [&](std::size_t t) {
        return static_cast<double>(prev.control.prev_level_cmm[t]) / 100.0;
    };
    const auto crossed_below = [&](std::size_t t, double thr) {
        return lvl(t) < thr && prev_lvl(t) >= thr;
    };
    const auto crossed_above = [&](std::size_t t, double thr) {
        return lvl(t) > thr && prev_lvl(t) <= thr;
    };

    // -- schedule ------------------------------------------------------
    const std::int64_t phase = s.clock - params.backwash_offset;
    const std::int64_t in_period = phase >= 0 ? phase % params.backwash_period : -1;
    if (in_period == 0)
        s.control.backwash_running = lvl(T601) > params.levels[T601].low;
    const bool backwash_window = in_period >= 0 && in_period < params.backwash_duration;
    if (!backwash_window) s.control.backwash_running = false;
    const bool backwash = backwash_window && s.control.backwash_running;
    const bool flush = in_period >= params.backwash_duration &&
                       in_period < params.backwash_duration + params.flush_duration;

    // -- control scan --------------------------------------------------
    // MV101: open below Low, close above High. Latched variant only reacts
    // to crossings, so a tampered output persists until the next crossing.
    bool mv101 = prev.valve_open[MV101];
    if (params.latched_control) {
        if (crossed_below(T101, params.levels[T101].low)) mv101 = true;
        if (crossed_above(T101, params.levels[T101].high)) mv101 = false;
    } else {
        if (lvl(T101) < params.levels[T101].low) mv101 = true;
        else if (lvl(T101) > params.levels[T101].high) mv101 = false;
    }
    if (in.cmd_valve[MV101]) mv101 = *in.cmd_valve[MV101];
    if (in.force_valve[MV101]) mv101 = *in.force_valve[MV101];

    // MV201 tracks stage-2 demand (T301 wants water); same latch behavior.
    bool mv201 = prev.valve_open[MV201];
    if (params.latched_control) {
        if (crossed_below(T301, params.levels[T301].low)) mv201 = true;
        if (crossed_above(T301, params.levels[T301].high)) mv201 = false;
    } else {
        if (lvl(T301) < params.levels[T301].low) mv201 = true;
        else if (lvl(T301) > params.levels[T301].high) mv201 = false;
    }
    if (in.cmd_valve[MV201]) mv201 = *in.cmd_valve[MV201];
    if (in.force_valve[MV201]) mv201 = *in.force_valve[MV201];

    // P101 transfers raw water when the line is open; dry-run protection is
    // hard-wired and also gates operator commands.
    const bool p101_gate = mv201 && lvl(T101) > params.levels[T101].low_low;
    bool p101 = p101_gate;
    if (in.cmd_pump[P101]) p101 = *in.cmd_pump[P101] && p101_gate;
    if (in.force_pump[P101]) p101 = *in.force_pump[P101];

    // T401 demand latch (not writable from outside; recovers on its own).
    if (lvl(T401) < params.levels[T401].low) s.control.t401_demand = true;
    else if (lvl(T401) > params.levels[T401].high) s.control.t401_demand = false;

    const bool filtration =
        s.control.t401_demand && !backwash && !flush && lvl(T301) > params.levels[T301].low_low;

    bool mv302 = filtration;
    if (in.cmd_valve[MV302]) mv302 = *in.cmd_valve[MV302];
    if (in.force_valve[MV302]) mv302 = *in.force_valve[MV302];
    bool mv304 = flush;
    if (in.cmd_valve[MV304]) mv304 = *in.cmd_valve[MV304];
    if (in.force_valve[MV304]) mv304 = *in.force_valve[MV304];
    bool mv301 = backwash;
    if (in.cmd_valve[MV301]) mv301 = *in.cmd_valve[MV301];
    if (in.force_valve[MV301]) mv301 = *in.force_valve[MV301];
    bool mv303 = backwash;
    if (in.cmd_valve[MV303]) mv303 = *in.cmd_valve[MV303];
    if (in.force_valve[MV303]) mv303 = *in.force_valve[MV303];

    const bool p302_gate = (mv302 || mv304) && lvl(T301) > params.levels[T301].low_low;
    bool p302 = (filtration || flush) && p302_gate;
    if (in.cmd_pump[P302]) p302 = *in.cmd_pump[P302] && p302_gate;
    if (in.force_pump[P302]) p302 = *in.force_pump[P302];

    const bool p602_gate = mv301 && mv303 && lvl(T601) > params.levels[T601].low_low;
    bool p602 = backwash && p602_gate;
    if (in.cmd_pump[P602]) p602 = *in.cmd_pump[P602] && p602_gate;
    if (in.force_pump[P602]) p602 = *in.force_pump[P602];

    // -- flows ----------------------------------------------------------
    const double q_inlet = mv101 ? params.inlet_rate : 0.0;
    const double q_12 = (p101 && mv201 && prev.level_cmm[T101] > 0) ? params.p101_rate : 0.0;
    const double q_uf =
        (p302 && (mv302 || mv304) && prev.level_cmm[T301] > 0) ? params.p302_rate : 0.0;
    const double q_to_t401 = mv302 ? q_uf : 0.0;
    const double q_bw = (p602 && mv301 && mv303 && prev.level_cmm[T601] > 0) ? params.p602_rate : 0.0;

    // Demand noise is drawn every step so forcing never desynchronizes the
    // stream.
    sim::Rng rng{prev.rng_state};
    const double u = rng.uniform();
    s.rng_state = rng.state;
    // RO low-level protection trips early enough that the draw itself can
    // never push T401 through LowLow.
    const double ro_step_mm = params.ro_draw_rate * (1.0 + params.noise_amplitude) *
                              static_cast<double>(params.dt) * (1000.0 / 3600.0) /
                              params.tank_area[T401];
    double q_ro = 0.0;
    if (prev.level_cmm[T401] > 0 && lvl(T401) > params.levels[T401].low_low + ro_step_mm)
        q_ro = sim::quantize3(params.ro_draw_rate * (1.0 + params.noise_amplitude * (2.0 * u - 1.0)));
    const double q_recycle =
        lvl(T601) < params.levels[T601].high ? sim::quantize3(q_ro * params.ro_recycle_frac) : 0.0;

    const auto spoof = [&](std::size_t f, double actual) {
        if (!in.force_flow_high[f]) return actual;
        return *in.force_flow_high[f] ? std::max(params.spoofed_flow_value, params.flow_threshold)
                                      : 0.0;
    };
    s.flow_actual = {q_inlet, q_12, q_uf, q_bw};
    s.flow_measured = {spoof(FIT101, q_inlet), spoof(FIT201, q_12), spoof(FIT301, q_uf),
                       spoof(FIT601, q_bw)};

    // Dosing pumps follow the measured stage-2 flow; spoofing FIT201 drives
    // them directly.
    const bool dosing_gate = s.flow_measured[FIT201] >= params.flow_threshold;
    bool p203 = dosing_gate;
    if (in.cmd_pump[P203]) p203 = *in.cmd_pump[P203] && dosing_gate;
    if (in.force_pump[P203]) p203 = *in.force_pump[P203];
    bool p205 = dosing_gate;
    if (in.cmd_pump[P205]) p205 = *in.cmd_pump[P205] && dosing_gate;
    if (in.force_pump[P205]) p205 = *in.force_pump[P205];

    s.valve_open = {mv101, mv201, mv301, mv302, mv303, mv304};
    s.pump_on = {p101, p203, p205, p302, p602};

    // -- mass balance ----------------------------------------------------
    s.tank_in = {q_inlet, q_12, q_to_t401, q_recycle};
    s.tank_out = {q_12, q_uf, q_ro, q_bw};
    const auto brim_cmm = static_cast<std::int64_t>(std::llround(params.tank_brim_mm * 100.0));
    for (std::size_t t = 0; t < kTanks; ++t) {
        const double net = s.tank_in[t] - s.tank_out[t];
        const auto delta = static_cast<std::int64_t>(
            std::llround(net * static_cast<double>(params.dt) * sim::kCmmPerM3hS / params.tank_area[t]));
        std::int64_t next = prev.level_cmm[t] + delta;
        if (next < 0) next = 0;
        if (next > brim_cmm) next = brim_cmm;
        s.level_cmm[t] = next;
    }

    // -- chemical proxies -------------------------------------------------
    // Dosing into a dry line concentrates chemicals: ORP climbs, pH drops.
    // Otherwise both relax linearly back to their setpoints.
    const bool overdosing = (p203 || p205) && q_12 < params.flow_threshold;
    const auto relax = [&](std::int64_t value, std::int64_t setpoint, std::int64_t rate) {
        if (value < setpoint) return std::min(setpoint, value + rate);
        return std::max(setpoint, value - rate);
    };
    const auto orp_set = static_cast<std::int64_t>(std::llround(params.orp_setpoint * 1000.0));
    const auto ph_set = static_cast<std::int64_t>(std::llround(params.ph_setpoint * 1e6));
    if (overdosing) {
        s.orp_milli += static_cast<std::int64_t>(std::llround(params.orp_dose_rate * 1000.0)) * params.dt;
        s.ph_micro -= static_cast<std::int64_t>(std::llround(params.ph_dose_rate * 1e6)) * params.dt;
        if (s.ph_micro < 0) s.ph_micro = 0;
    } else {
        s.orp_milli = relax(s.orp_milli, orp_set,
                            static_cast<std::int64_t>(std::llround(params.orp_relax_rate * 1000.0)) *
                                params.dt);
        s.ph_micro = relax(s.ph_micro, ph_set,
                           static_cast<std::int64_t>(std::llround(params.ph_relax_rate * 1e6)) *
                               params.dt);
    }

    s.control.prev_level_cmm = prev.level_cmm;
    return s;
}

// Returns the latched controls to what plain level logic would command,
// modeling the operator putting tampered outputs back in AUTO.
inline void restore_control(PlantState& s, const PlantParams& params) {
    s.valve_open[MV101] = s.level_mm(T101) < params.levels[T101].high;
    s.valve_open[MV201] = s.level_mm(T301) < params.levels[T301].high;
}

// Historian schema of the simulator trace. Ternary-valve pairings follow
// the plant line layout.
inline AttributeSchema trace_schema() {
    AttributeSchema s;
    const auto valve_pair = [](const std::string& mv) -> std::string {
        if (mv == "MV101") return "FIT101";
        if (mv == "MV201") return "FIT201";
        return "FIT301";
    };
    s.push_back({"FIT101", AttrKind::Analog, "m3/h", ""});
    s.push_back({"LIT101", AttrKind::Analog, "mm", ""});
    s.push_back({"MV101", AttrKind::TernaryValve, "", valve_pair("MV101")});
    s.push_back({"P101", AttrKind::BinaryActuator, "", ""});
    s.push_back({"FIT201", AttrKind::Analog, "m3/h", ""});
    s.push_back({"MV201", AttrKind::TernaryValve, "", valve_pair("MV201")});
    s.push_back({"P203", AttrKind::BinaryActuator, "", ""});
    s.push_back({"P205", AttrKind::BinaryActuator, "", ""});
    s.push_back({"LIT301", AttrKind::Analog, "mm", ""});
    s.push_back({"FIT301", AttrKind::Analog, "m3/h", ""});
    s.push_back({"MV301", AttrKind::TernaryValve, "", valve_pair("MV301")});
    s.push_back({"MV302", AttrKind::TernaryValve, "", valve_pair("MV302")});
    s.push_back({"MV303", AttrKind::TernaryValve, "", valve_pair("MV303")});
    s.push_back({"MV304", AttrKind::TernaryValve, "", valve_pair("MV304")});
    s.push_back({"P302", AttrKind::BinaryActuator, "", ""});
    s.push_back({"LIT401", AttrKind::Analog, "mm", ""});
    s.push_back({"FIT601", AttrKind::Analog, "m3/h", ""});
    s.push_back({"P602", AttrKind::BinaryActuator, "", ""});
    s.push_back({"LIT601", AttrKind::Analog, "mm", ""});
    s.push_back({"ORP", AttrKind::Analog, "mV", ""});
    s.push_back({"pH", AttrKind::Analog, "", ""});
    return s;
}

inline PlantRecord record_from_state(const PlantState& s) {
    PlantRecord r;
    r.timestamp = s.clock;
    const auto valve = [&](std::size_t v) { return s.valve_open[v] ? 2.0 : 1.0; };
    const auto pump = [&](std::size_t p) { return s.pump_on[p] ? 2.0 : 1.0; };
    r.values = {s.flow_measured[FIT101],
                s.level_mm(T101),
                valve(MV101),
                pump(P101),
                s.flow_measured[FIT201],
                valve(MV201),
                pump(P203),
                pump(P205),
                s.level_mm(T301),
                s.flow_measured[FIT301],
                valve(MV301),
                valve(MV302),
                valve(MV303),
                valve(MV304),
                pump(P302),
                s.level_mm(T401),
                s.flow_measured[FIT601],
                pump(P602),
                s.level_mm(T601),
                s.orp(),
                s.ph()};
    return r;
}

// Closed-loop run with seeded demand noise; 1 Hz historian output,
// bit-identical for identical (params, duration, seed).
inline Dataset run_normal(const PlantParams& params, std::int64_t duration, std::uint64_t seed) {
    if (duration < 1) throw ConfigError("duration must be >= 1");
    PlantState s = initial_state(params, seed);
    Dataset d;
    d.schema = trace_schema();
    d.label = "sim-normal";
    d.records.reserve(static_cast<std::size_t>(duration));
    for (std::int64_t t = 0; t < duration; ++t) {
        s = step(s, params);
        d.records.push_back(record_from_state(s));
    }
    return d;
}

enum class Anomaly {
    Overflow,
    Underflow,
    Overdose,
    ProcessStarvation,
    NoImpact,
    AlreadySatisfied,
    FalseAttack
};

inline const char* to_string(Anomaly a) {
    switch (a) {
        case Anomaly::Overflow: return "overflow";
        case Anomaly::Underflow: return "underflow";
        case Anomaly::Overdose: return "overdose";
        case Anomaly::ProcessStarvation: return "process-starvation";
        case Anomaly::NoImpact: return "no-impact";
        case Anomaly::AlreadySatisfied: return "already-satisfied";
        case Anomaly::FalseAttack: return "false-attack";
    }
    return "?";
}

struct Evidence {
    std::int64_t timestamp = 0;
    std::string signal;
    double value = 0;
    double threshold = 0;
};

struct AnomalyReport {
    Anomaly classification = Anomaly::NoImpact;
    std::vector<Evidence> evidence;
    std::string narrative;
};

// Scans a simulator trace for physical impact. Severity order: overflow,
// underflow, overdose, process starvation. Level breaches only count when
// the trace itself shows the crossing, so leftover state from an earlier
// window is not re-flagged.
inline AnomalyReport detect_anomalies(const Dataset& trace, const PlantParams& params) {
    struct Cols {
        std::size_t lit[kTanks], orp, ph, p203, p205, fit201, fit301;
    } c{};
    for (std::size_t t = 0; t < kTanks; ++t) c.lit[t] = trace.column_or_throw(level_sensor_names()[t]);
    c.orp = trace.column_or_throw("ORP");
    c.ph = trace.column_or_throw("pH");
    c.p203 = trace.column_or_throw("P203");
    c.p205 = trace.column_or_throw("P205");
    c.fit201 = trace.column_or_throw("FIT201");
    c.fit301 = trace.column_or_throw("FIT301");

    std::vector<Evidence> overflow, underflow, overdose, starvation;
    std::int64_t dry_stage2 = 0, dry_ro = 0;

    const PlantRecord* prev = nullptr;
    for (const auto& rec : trace.records) {
        for (std::size_t t = 0; t < kTanks; ++t) {
            const double level = rec.values[c.lit[t]];
            const auto& th = params.levels[t];
            if (prev && level > th.high_high && prev->values[c.lit[t]] <= th.high_high)
                overflow.push_back({rec.timestamp, level_sensor_names()[t], level, th.high_high});
            if (prev && level < th.low_low && prev->values[c.lit[t]] >= th.low_low)
                underflow.push_back({rec.timestamp, level_sensor_names()[t], level, th.low_low});
        }

        const bool dosing = rec.values[c.p203] == 2.0 || rec.values[c.p205] == 2.0;
        const bool dry_line = rec.values[c.fit201] < params.flow_threshold;
        if (dosing && dry_line) {
            const double orp = rec.values[c.orp];
            const double ph = rec.values[c.ph];
            if (orp < params.orp_band_low || orp > params.orp_band_high)
                overdose.push_back({rec.timestamp, "ORP", orp,
                                    orp > params.orp_band_high ? params.orp_band_high
                                                               : params.orp_band_low});
            else if (ph < params.ph_band_low || ph > params.ph_band_high)
                overdose.push_back({rec.timestamp, "pH", ph,
                                    ph < params.ph_band_low ? params.ph_band_low : params.ph_band_high});
        }

        // Scheduled backwash/flush legitimately pauses the UF line; hold the
        // starvation counters through those windows.
        const std::int64_t phase = rec.timestamp - params.backwash_offset;
        const std::int64_t in_period = phase >= 0 ? phase % params.backwash_period : -1;
        const bool maintenance =
            in_period >= 0 && in_period < params.backwash_duration + params.flush_duration;

        const bool stage2_demand = rec.values[c.lit[T301]] < params.levels[T301].low &&
                                   rec.values[c.lit[T101]] > params.levels[T101].low_low;
        if (stage2_demand && rec.values[c.fit201] < params.flow_threshold) {
            if (!maintenance && ++dry_stage2 >= params.starvation_hold)
                starvation.push_back({rec.timestamp, "FIT201", rec.values[c.fit201],
                                      params.flow_threshold});
        } else {
            dry_stage2 = 0;
        }
        const bool ro_demand = rec.values[c.lit[T401]] < params.levels[T401].low &&
                               rec.values[c.lit[T301]] > params.levels[T301].low_low;
        if (ro_demand && rec.values[c.fit301] < params.flow_threshold) {
            if (!maintenance && ++dry_ro >= params.starvation_hold)
                starvation.push_back({rec.timestamp, "FIT301", rec.values[c.fit301],
                                      params.flow_threshold});
        } else {
            dry_ro = 0;
        }
        prev = &rec;
    }

    AnomalyReport rep;
    const auto finish = [&](Anomaly a, std::vector<Evidence> ev, const std::string& text) {
        rep.classification = a;
        if (ev.size() > 8) ev.resize(8);
        rep.evidence = std::move(ev);
        rep.narrative = text;
    };
    char buf[160];
    if (!overflow.empty()) {
        const auto& e = overflow.front();
        std::snprintf(buf, sizeof(buf), "%s crossed HighHigh %.0f mm at t=%lld (%.1f mm)",
                      e.signal.c_str(), e.threshold, static_cast<long long>(e.timestamp), e.value);
        finish(Anomaly::Overflow, std::move(overflow), buf);
    } else if (!underflow.empty()) {
        const auto& e = underflow.front();
        std::snprintf(buf, sizeof(buf), "%s crossed LowLow %.0f mm at t=%lld (%.1f mm)",
                      e.signal.c_str(), e.threshold, static_cast<long long>(e.timestamp), e.value);
        finish(Anomaly::Underflow, std::move(underflow), buf);
    } else if (!overdose.empty()) {
        const auto& e = overdose.front();
        std::snprintf(buf, sizeof(buf), "%s left its safe band at t=%lld (%.3f) while dosing into a dry line",
                      e.signal.c_str(), static_cast<long long>(e.timestamp), e.value);
        finish(Anomaly::Overdose, std::move(overdose), buf);
    } else if (!starvation.empty()) {
        const auto& e = starvation.front();
        std::snprintf(buf, sizeof(buf), "%s stayed dry for %llds against open demand (t=%lld)",
                      e.signal.c_str(), static_cast<long long>(params.starvation_hold),
                      static_cast<long long>(e.timestamp));
        finish(Anomaly::ProcessStarvation, std::move(starvation), buf);
    } else {
        rep.narrative = "no impact observed";
    }
    return rep;
}

// An attack to replay: establish the prefix, then force the rule's
// antecedent and consequent over [start, end].
struct AttackScript {
    AttackRule rule;
    std::vector<Item> state_prefix;
    std::int64_t start = 0;
    std::int64_t end = 0;
};

inline void validate_script(const AttackScript& script) {
    if (script.start < 1) throw ScheduleError("attack start must be >= 1");
    if (script.start >= script.end) throw ScheduleError("attack start must precede end");
}

namespace sim {

// Human-readable reason a prefix item is not taking effect.
inline std::string blocking_interlock(const PlantState& s, const Item& item,
                                      const PlantParams& params) {
    const std::string want = item_token(item);
    if (item.attribute == "P101") {
        if (!s.valve_open[MV201]) return want + " blocked: P101 is interlocked on MV201=Open";
        if (s.level_mm(T101) <= params.levels[T101].low_low)
            return want + " blocked: dry-run interlock, T101 at/below LowLow";
    }
    if (item.attribute == "P203" || item.attribute == "P205")
        return want + " blocked: dosing interlock, FIT201 below the flow threshold";
    if (item.attribute == "P302") {
        if (!(s.valve_open[MV302] || s.valve_open[MV304]))
            return want + " blocked: no open discharge path (MV302/MV304)";
        if (s.level_mm(T301) <= params.levels[T301].low_low)
            return want + " blocked: dry-run interlock, T301 at/below LowLow";
    }
    if (item.attribute == "P602") {
        if (!(s.valve_open[MV301] && s.valve_open[MV303]))
            return want + " blocked: backwash path closed (MV301/MV303)";
        if (s.level_mm(T601) <= params.levels[T601].low_low)
            return want + " blocked: dry-run interlock, T601 at/below LowLow";
    }
    return want + " not reached within the settling window";
}

struct LaunchPlan {
    std::vector<Item> force_items; // antecedent + consequent
    StepInputs forced_and_prefix;  // applied during the attack window
    StepInputs prefix_only;        // applied while settling
};

inline LaunchPlan plan_launch(const AttackScript& script) {
    LaunchPlan plan;
    plan.force_items = script.rule.antecedent;
    plan.force_items.push_back(script.rule.consequent);
    // Actuator prefix items are operator commands; sensor prefix items are
    // wait-for conditions and carry no input.
    std::vector<Item> actuator_prefix;
    for (const auto& it : script.state_prefix) {
        bool is_flow = false;
        for (std::size_t f = 0; f < kFlows; ++f)
            if (it.attribute == flow_names()[f]) is_flow = true;
        if (!is_flow) actuator_prefix.push_back(it);
    }
    plan.prefix_only = make_inputs({}, actuator_prefix);
    plan.forced_and_prefix = make_inputs(plan.force_items, actuator_prefix);
    return plan;
}

} // namespace sim

// Replays one script against a fresh plant. Runs normal until start,
// establishes the prefix (or fails naming the blocking interlock), reports
// already-satisfied when the full pattern holds with zero forcing, else
// forces the rule through [launch, end] and classifies the whole trace.
inline std::pair<Dataset, AnomalyReport> launch_attack(const AttackScript& script,
                                                       const PlantParams& params,
                                                       std::uint64_t seed) {
    validate_script(script);
    const auto plan = sim::plan_launch(script);

    PlantState s = initial_state(params, seed);
    Dataset trace;
    trace.schema = trace_schema();
    trace.label = "sim-attack";

    const auto record = [&]() { trace.records.push_back(record_from_state(s)); };
    for (std::int64_t t = 1; t < script.start; ++t) {
        s = step(s, params);
        record();
    }

    // settle the prefix
    std::int64_t launch_at = script.start;
    bool satisfied = script.state_prefix.empty();
    for (std::int64_t t = script.start; !satisfied && t <= script.start + params.settle_time; ++t) {
        s = step(s, params, plan.prefix_only);
        record();
        launch_at = t + 1;
        satisfied = true;
        for (const auto& it : script.state_prefix)
            if (!state_item_holds(s, it, params)) satisfied = false;
    }
    if (!satisfied) {
        for (const auto& it : script.state_prefix)
            if (!state_item_holds(s, it, params))
                throw LaunchError("prefix unreachable: " + sim::blocking_interlock(s, it, params));
    }
    if (launch_at >= script.end)
        throw LaunchError("prefix settling consumed the whole attack window");

    // already satisfied?
    bool already = true;
    for (const auto& it : plan.force_items)
        if (!state_item_holds(s, it, params)) already = false;

    AnomalyReport rep;
    if (already) {
        for (std::int64_t t = launch_at; t <= script.end + params.cooldown; ++t) {
            s = step(s, params);
            record();
        }
        rep.classification = Anomaly::AlreadySatisfied;
        for (const auto& it : plan.force_items)
            rep.evidence.push_back({launch_at, item_token(it), 1.0, 1.0});
        rep.narrative = "plant was already operating as per the attack rule; no forcing applied";
        return {std::move(trace), std::move(rep)};
    }

    for (std::int64_t t = launch_at; t <= script.end; ++t) {
        s = step(s, params, plan.forced_and_prefix);
        record();
    }
    for (std::int64_t t = script.end + 1; t <= script.end + params.cooldown; ++t) {
        s = step(s, params);
        record();
    }
    rep = detect_anomalies(trace, params);
    return {std::move(trace), std::move(rep)};
}

struct ScenarioRow {
    std::size_t index = 0; // 1-based, as in the reference tables
    std::string rule_text;
    std::string prefix_text;
    std::int64_t start = 0;
    std::int64_t end = 0;
    Anomaly classification = Anomaly::NoImpact;
    std::string note;
};

struct ScenarioResult {
    Dataset trace;
    std::vector<ScenarioRow> rows;
};

// Replays all scripts sequentially in one plant session. Windows must not
// overlap. After each window's cooldown the latched controls are restored,
// standing in for the operator returning outputs to AUTO between runs.
inline ScenarioResult run_scenario_table(const std::vector<AttackScript>& scripts,
                                         const PlantParams& params, std::uint64_t seed) {
    for (std::size_t i = 0; i < scripts.size(); ++i) {
        validate_script(scripts[i]);
        if (i > 0 && scripts[i].start <= scripts[i - 1].end)
            throw ScheduleError("script " + std::to_string(i + 1) + " overlaps script " +
                                std::to_string(i) + " (windows must not overlap)");
    }

    ScenarioResult res;
    res.trace.schema = trace_schema();
    res.trace.label = "sim-scenarios";
    if (scripts.empty()) return res;

    PlantState s = initial_state(params, seed);
    const auto record = [&]() { res.trace.records.push_back(record_from_state(s)); };

    std::int64_t now = 0; // last recorded clock
    std::optional<std::int64_t> pending_restore;
    const auto run_normal_until = [&](std::int64_t t_end) {
        while (now < t_end) {
            s = step(s, params);
            record();
            ++now;
            if (pending_restore && now >= *pending_restore) {
                restore_control(s, params);
                pending_restore.reset();
            }
        }
    };

    for (std::size_t i = 0; i < scripts.size(); ++i) {
        const auto& script = scripts[i];
        const auto plan = sim::plan_launch(script);
        run_normal_until(script.start - 1);

        std::int64_t launch_at = script.start;
        bool satisfied = script.state_prefix.empty();
        while (!satisfied && now < script.start + params.settle_time) {
            s = step(s, params, plan.prefix_only);
            record();
            ++now;
            launch_at = now + 1;
            satisfied = true;
            for (const auto& it : script.state_prefix)
                if (!state_item_holds(s, it, params)) satisfied = false;
        }
        if (!satisfied) {
            for (const auto& it : script.state_prefix)
                if (!state_item_holds(s, it, params))
                    throw LaunchError("script " + std::to_string(i + 1) + ": prefix unreachable: " +
                                      sim::blocking_interlock(s, it, params));
        }
        if (launch_at >= script.end)
            throw LaunchError("script " + std::to_string(i + 1) +
                              ": prefix settling consumed the whole attack window");

        bool already = true;
        for (const auto& it : plan.force_items)
            if (!state_item_holds(s, it, params)) already = false;

        const std::int64_t window_close = script.end + params.cooldown;
        const std::int64_t slice_end =
            i + 1 < scripts.size() ? std::min(window_close, scripts[i + 1].start - 1) : window_close;

        ScenarioRow row;
        row.index = i + 1;
        row.rule_text = serialize_rule(script.rule);
        for (std::size_t k = 0; k < script.state_prefix.size(); ++k) {
            if (k) row.prefix_text += ", ";
            row.prefix_text += item_token(script.state_prefix[k]);
        }
        if (row.prefix_text.empty()) row.prefix_text = "N/A";
        row.start = script.start;
        row.end = script.end;

        if (already) {
            run_normal_until(slice_end);
            row.classification = Anomaly::AlreadySatisfied;
            row.note = "plant was already operating as per the attack rule";
        } else {
            while (now < script.end) {
                s = step(s, params, plan.forced_and_prefix);
                record();
                ++now;
            }
            pending_restore = window_close;
            run_normal_until(slice_end);
            const auto slice = slice_window(res.trace, script.start, slice_end);
            const auto rep = detect_anomalies(slice, params);
            row.classification = rep.classification;
            row.note = rep.narrative;
        }
        res.rows.push_back(std::move(row));
    }
    return res;
}

// Scripts file: one per line, tab-separated
//   rule <TAB> prefix-items-or-N/A <TAB> start <TAB> end
inline std::vector<AttackScript> read_scripts(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<AttackScript> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        std::vector<std::string_view> cols;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= t.size(); ++i) {
            if (i == t.size() || t[i] == '\t') {
                cols.push_back(detail::trim(t.substr(start, i - start)));
                start = i + 1;
            }
        }
        if (cols.size() != 4)
            throw ParseError(path + " line " + std::to_string(lineno) +
                             ": expected rule<TAB>prefix<TAB>start<TAB>end");
        try {
            AttackScript script;
            script.rule = parse_rule(cols[0]);
            if (cols[1] != "N/A" && cols[1] != "n/a" && !cols[1].empty()) {
                std::size_t s2 = 0;
                const auto pf = cols[1];
                for (std::size_t i = 0; i <= pf.size(); ++i) {
                    if (i == pf.size() || pf[i] == ',') {
                        const auto tok = detail::trim(pf.substr(s2, i - s2));
                        if (!tok.empty()) script.state_prefix.push_back(detail::parse_rule_item(tok, s2));
                        s2 = i + 1;
                    }
                }
            }
            script.start = detail::parse_i64(cols[2]);
            script.end = detail::parse_i64(cols[3]);
            validate_script(script);
            out.push_back(std::move(script));
        } catch (const Error& e) {
            throw ParseError(path + " line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

// Scenario table mirroring the reference layout; rule and prefix cells are
// quoted because they contain commas.
inline void write_scenario_csv(const std::vector<ScenarioRow>& rows, const std::string& path,
                               const std::vector<std::pair<std::string, std::string>>& metadata = {}) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    for (const auto& [k, v] : metadata) out << "# " << k << ": " << v << "\n";
    out << "s_no,attack_rule,state_prefix,start_time,end_time,impact,note\n";
    for (const auto& r : rows)
        out << r.index << ",\"" << r.rule_text << "\",\"" << r.prefix_text << "\"," << r.start << ","
            << r.end << "," << to_string(r.classification) << ",\"" << r.note << "\"\n";
    if (!out) throw IoError("write failed: " + path);
}

} // namespace apmine
