#include "hcqkd/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "hcqkd/errors.hpp"
#include "hcqkd/rng.hpp"

namespace hcqkd {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
                return key == a;
            }) == allowed.end())
            throw ConfigError("config: unknown key '" + path + "." + key + "'");
    }
}

template <typename T>
void maybe(const json& obj, const char* key, T& field) {
    if (obj.contains(key)) obj.at(key).get_to(field);
}

ElementConfig parse_element(const json& obj, const std::string& path) {
    check_keys(obj, path,
               {"quantum_drop_loss_db", "classical_express_loss_db",
                "notch_rejection_db", "scatter_fraction"});
    ElementConfig e;
    maybe(obj, "quantum_drop_loss_db", e.quantum_drop_loss_db);
    maybe(obj, "classical_express_loss_db", e.classical_express_loss_db);
    maybe(obj, "notch_rejection_db", e.notch_rejection_db);
    maybe(obj, "scatter_fraction", e.scatter_fraction);
    return e;
}

json element_json(const ElementConfig& e) {
    return {{"quantum_drop_loss_db", e.quantum_drop_loss_db},
            {"classical_express_loss_db", e.classical_express_loss_db},
            {"notch_rejection_db", e.notch_rejection_db},
            {"scatter_fraction", e.scatter_fraction}};
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    SplitMix64 sm(seed ^ (0x5851f42d4c957f2dULL * (index + 1)));
    return sm.next();
}

std::string format_g6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace

ScenarioConfig ScenarioConfig::from_json_text(const std::string& text,
                                              const std::string& base_dir) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: JSON parse error: ") + e.what());
    }
    ScenarioConfig cfg;
    try {
        check_keys(root, "$",
                   {"plan", "link", "cow", "distillation", "backend", "receiver",
                    "sweep"});
        if (root.contains("plan")) {
            const auto& p = root.at("plan");
            check_keys(p, "plan",
                       {"grid_channel_count", "grid_start_nm", "grid_end_nm",
                        "channel_count", "aggregate_launch_dbm",
                        "source_power_per_channel_dbm", "quantum_nm", "sync_nm",
                        "distillation_down_nm", "distillation_up_nm"});
            maybe(p, "grid_channel_count", cfg.plan.grid_channel_count);
            maybe(p, "grid_start_nm", cfg.plan.grid_start_nm);
            maybe(p, "grid_end_nm", cfg.plan.grid_end_nm);
            cfg.plan.channel_count = cfg.plan.grid_channel_count;
            maybe(p, "channel_count", cfg.plan.channel_count);
            maybe(p, "aggregate_launch_dbm", cfg.plan.aggregate_launch_dbm);
            maybe(p, "source_power_per_channel_dbm", cfg.plan.source_power_per_channel_dbm);
            maybe(p, "quantum_nm", cfg.plan.quantum_nm);
            maybe(p, "sync_nm", cfg.plan.sync_nm);
            maybe(p, "distillation_down_nm", cfg.plan.distillation_down_nm);
            maybe(p, "distillation_up_nm", cfg.plan.distillation_up_nm);
        }
        if (root.contains("link")) {
            const auto& l = root.at("link");
            check_keys(l, "link",
                       {"fiber_kind", "span_length_km", "attenuation_db_per_km",
                        "spr_profile_path", "hcf_suppression_db", "acceptance_bw_nm",
                        "mux_loss_db", "amplifier", "a_tx_db", "ce_t", "ce_r",
                        "a_rx_db"});
            maybe(l, "fiber_kind", cfg.link.fiber_kind);
            maybe(l, "span_length_km", cfg.link.span_length_km);
            maybe(l, "attenuation_db_per_km", cfg.link.attenuation_db_per_km);
            maybe(l, "spr_profile_path", cfg.link.spr_profile_path);
            maybe(l, "hcf_suppression_db", cfg.link.hcf_suppression_db);
            maybe(l, "acceptance_bw_nm", cfg.link.acceptance_bw_nm);
            maybe(l, "mux_loss_db", cfg.link.mux_loss_db);
            if (l.contains("amplifier")) {
                const auto& a = l.at("amplifier");
                check_keys(a, "link.amplifier",
                           {"output_clamp_dbm", "small_signal_gain_db",
                            "ase_loaded_dbm_per_0p1nm", "ase_noload_dbm_per_0p1nm",
                            "ase_enabled"});
                maybe(a, "output_clamp_dbm", cfg.link.amplifier.output_clamp_dbm);
                maybe(a, "small_signal_gain_db", cfg.link.amplifier.small_signal_gain_db);
                maybe(a, "ase_loaded_dbm_per_0p1nm",
                      cfg.link.amplifier.ase_loaded_dbm_per_0p1nm);
                maybe(a, "ase_noload_dbm_per_0p1nm",
                      cfg.link.amplifier.ase_noload_dbm_per_0p1nm);
                maybe(a, "ase_enabled", cfg.link.amplifier.ase_enabled);
            }
            maybe(l, "a_tx_db", cfg.link.a_tx_db);
            if (l.contains("ce_t")) cfg.link.ce_t = parse_element(l.at("ce_t"), "link.ce_t");
            if (l.contains("ce_r")) cfg.link.ce_r = parse_element(l.at("ce_r"), "link.ce_r");
            maybe(l, "a_rx_db", cfg.link.a_rx_db);
        }
        if (root.contains("cow")) {
            const auto& c = root.at("cow");
            check_keys(c, "cow",
                       {"slot_rate_hz", "frame_rate_hz", "mean_photon_number",
                        "decoy_fraction", "data_branch", "intrinsic_qber",
                        "intrinsic_visibility", "monitor_duty", "spad"});
            maybe(c, "slot_rate_hz", cfg.cow.slot_rate_hz);
            maybe(c, "frame_rate_hz", cfg.cow.frame_rate_hz);
            maybe(c, "mean_photon_number", cfg.cow.mean_photon_number);
            maybe(c, "decoy_fraction", cfg.cow.decoy_fraction);
            maybe(c, "data_branch", cfg.cow.data_branch);
            maybe(c, "intrinsic_qber", cfg.cow.intrinsic_qber);
            maybe(c, "intrinsic_visibility", cfg.cow.intrinsic_visibility);
            maybe(c, "monitor_duty", cfg.cow.monitor_duty);
            if (c.contains("spad")) {
                const auto& s = c.at("spad");
                check_keys(s, "cow.spad", {"efficiency", "dark_rate_hz", "dead_time_s"});
                maybe(s, "efficiency", cfg.cow.spad.efficiency);
                maybe(s, "dark_rate_hz", cfg.cow.spad.dark_rate_hz);
                maybe(s, "dead_time_s", cfg.cow.spad.dead_time_s);
            }
        }
        if (root.contains("distillation")) {
            const auto& d = root.at("distillation");
            check_keys(d, "distillation",
                       {"sample_fraction", "error_correction_efficiency",
                        "secret_fraction_strategy", "estimation_floor_bits"});
            maybe(d, "sample_fraction", cfg.distillation.sample_fraction);
            maybe(d, "error_correction_efficiency",
                  cfg.distillation.error_correction_efficiency);
            maybe(d, "secret_fraction_strategy",
                  cfg.distillation.secret_fraction_strategy);
            maybe(d, "estimation_floor_bits", cfg.distillation.estimation_floor_bits);
        }
        if (root.contains("backend")) {
            const auto& b = root.at("backend");
            check_keys(b, "backend", {"type", "frames", "seed"});
            maybe(b, "type", cfg.backend.type);
            maybe(b, "frames", cfg.backend.frames);
            maybe(b, "seed", cfg.backend.seed);
            if (cfg.backend.type != "analytic" && cfg.backend.type != "montecarlo")
                throw ConfigError("config: backend.type must be analytic or montecarlo");
        }
        if (root.contains("receiver")) {
            const auto& r = root.at("receiver");
            check_keys(r, "receiver", {"nep_mw", "sensitivity_spread_db"});
            maybe(r, "nep_mw", cfg.receiver.nep_mw);
            maybe(r, "sensitivity_spread_db", cfg.receiver.sensitivity_spread_db);
        }
        if (root.contains("sweep")) {
            const auto& s = root.at("sweep");
            check_keys(s, "sweep", {"aggregate_powers_dbm", "channel_counts"});
            maybe(s, "aggregate_powers_dbm", cfg.sweep.aggregate_powers_dbm);
            maybe(s, "channel_counts", cfg.sweep.channel_counts);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    namespace fs = std::filesystem;
    if (fs::path(cfg.link.spr_profile_path).is_relative())
        cfg.link.spr_profile_path = (fs::path(base_dir) / cfg.link.spr_profile_path).string();
    return cfg;
}

ScenarioConfig ScenarioConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::stringstream text;
    text << in.rdbuf();
    return from_json_text(text.str(), std::filesystem::path(path).parent_path().string());
}

std::string ScenarioConfig::to_json_text() const {
    json root;
    root["plan"] = {{"grid_channel_count", plan.grid_channel_count},
                    {"grid_start_nm", plan.grid_start_nm},
                    {"grid_end_nm", plan.grid_end_nm},
                    {"channel_count", plan.channel_count},
                    {"aggregate_launch_dbm", plan.aggregate_launch_dbm},
                    {"source_power_per_channel_dbm", plan.source_power_per_channel_dbm},
                    {"quantum_nm", plan.quantum_nm},
                    {"sync_nm", plan.sync_nm},
                    {"distillation_down_nm", plan.distillation_down_nm},
                    {"distillation_up_nm", plan.distillation_up_nm}};
    root["link"] = {{"fiber_kind", link.fiber_kind},
                    {"span_length_km", link.span_length_km},
                    {"attenuation_db_per_km", link.attenuation_db_per_km},
                    {"spr_profile_path", link.spr_profile_path},
                    {"hcf_suppression_db", link.hcf_suppression_db},
                    {"acceptance_bw_nm", link.acceptance_bw_nm},
                    {"mux_loss_db", link.mux_loss_db},
                    {"amplifier",
                     {{"output_clamp_dbm", link.amplifier.output_clamp_dbm},
                      {"small_signal_gain_db", link.amplifier.small_signal_gain_db},
                      {"ase_loaded_dbm_per_0p1nm", link.amplifier.ase_loaded_dbm_per_0p1nm},
                      {"ase_noload_dbm_per_0p1nm", link.amplifier.ase_noload_dbm_per_0p1nm},
                      {"ase_enabled", link.amplifier.ase_enabled}}},
                    {"a_tx_db", link.a_tx_db},
                    {"ce_t", element_json(link.ce_t)},
                    {"ce_r", element_json(link.ce_r)},
                    {"a_rx_db", link.a_rx_db}};
    root["cow"] = {{"slot_rate_hz", cow.slot_rate_hz},
                   {"frame_rate_hz", cow.frame_rate_hz},
                   {"mean_photon_number", cow.mean_photon_number},
                   {"decoy_fraction", cow.decoy_fraction},
                   {"data_branch", cow.data_branch},
                   {"intrinsic_qber", cow.intrinsic_qber},
                   {"intrinsic_visibility", cow.intrinsic_visibility},
                   {"monitor_duty", cow.monitor_duty},
                   {"spad",
                    {{"efficiency", cow.spad.efficiency},
                     {"dark_rate_hz", cow.spad.dark_rate_hz},
                     {"dead_time_s", cow.spad.dead_time_s}}}};
    root["distillation"] = {
        {"sample_fraction", distillation.sample_fraction},
        {"error_correction_efficiency", distillation.error_correction_efficiency},
        {"secret_fraction_strategy", distillation.secret_fraction_strategy},
        {"estimation_floor_bits", distillation.estimation_floor_bits}};
    root["backend"] = {{"type", backend.type},
                       {"frames", backend.frames},
                       {"seed", backend.seed}};
    root["receiver"] = {{"nep_mw", receiver.nep_mw},
                        {"sensitivity_spread_db", receiver.sensitivity_spread_db}};
    root["sweep"] = {{"aggregate_powers_dbm", sweep.aggregate_powers_dbm},
                     {"channel_counts", sweep.channel_counts}};
    return root.dump(2) + "\n";
}

std::string ScenarioConfig::hash() const {
    const std::string text = to_json_text();
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a 64
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a:%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ChannelPlan assemble_plan(const ScenarioConfig& config) {
    const auto& p = config.plan;
    if (p.channel_count > p.grid_channel_count)
        throw ConfigError("plan: channel_count exceeds the grid");
    if (p.grid_channel_count < 1) throw ConfigError("plan: empty grid");
    ChannelPlan plan;
    const double spacing =
        p.grid_channel_count > 1
            ? (p.grid_end_nm - p.grid_start_nm) / static_cast<double>(p.grid_channel_count - 1)
            : 0.0;
    // The lit channels are the grid channels closest to the quantum carrier.
    for (std::size_t i = 0; i < p.channel_count; ++i)
        plan.add(Channel(p.grid_start_nm + spacing * static_cast<double>(i),
                         OpticalPower::from_dbm(p.source_power_per_channel_dbm),
                         ChannelRole::ClassicalData));
    plan.grid_start_nm = p.grid_start_nm;
    plan.grid_end_nm = p.grid_end_nm;
    plan.grid_count = p.channel_count;
    plan.add(Channel(p.quantum_nm, OpticalPower::from_dbm(-52.0), ChannelRole::Quantum));
    plan.add(Channel(p.sync_nm, OpticalPower::from_dbm(-30.0), ChannelRole::Sync));
    // The distillation pair rides a separate fiber; carried for bookkeeping.
    plan.add(Channel(p.distillation_down_nm, OpticalPower::from_dbm(-3.0),
                     ChannelRole::DistillationDown));
    plan.add(Channel(p.distillation_up_nm, OpticalPower::from_dbm(-3.0),
                     ChannelRole::DistillationUp));
    return plan;
}

LinkChain assemble_chain(const ScenarioConfig& config) {
    const auto& l = config.link;
    FiberKind kind;
    if (l.fiber_kind == "HCF")
        kind = FiberKind::HCF;
    else if (l.fiber_kind == "SMF")
        kind = FiberKind::SMF;
    else
        throw ConfigError("link: fiber_kind must be HCF or SMF");

    SprsProfile profile = SprsProfile::from_file(l.spr_profile_path);
    if (kind == FiberKind::HCF) profile = profile.suppressed(l.hcf_suppression_db);

    LinkChain chain{
        l.mux_loss_db,
        Amplifier{l.amplifier.output_clamp_dbm, l.amplifier.small_signal_gain_db,
                  l.amplifier.ase_loaded_dbm_per_0p1nm,
                  l.amplifier.ase_noload_dbm_per_0p1nm},
        l.amplifier.ase_enabled,
        l.a_tx_db,
        CoexistenceElement{l.ce_t.quantum_drop_loss_db, l.ce_t.classical_express_loss_db,
                           l.ce_t.notch_rejection_db, l.ce_t.scatter_fraction},
        FiberSpan(l.span_length_km, l.attenuation_db_per_km, std::move(profile), kind),
        CoexistenceElement{l.ce_r.quantum_drop_loss_db, l.ce_r.classical_express_loss_db,
                           l.ce_r.notch_rejection_db, l.ce_r.scatter_fraction},
        l.a_rx_db,
        l.acceptance_bw_nm};

    // A_tx realizes the requested aggregate at the span input; the configured
    // value stands when no classical channel is lit.
    if (config.plan.channel_count > 0) {
        double source_agg_mw = 0.0;
        for (std::size_t i = 0; i < config.plan.channel_count; ++i)
            source_agg_mw +=
                dbm_to_mw(config.plan.source_power_per_channel_dbm - l.mux_loss_db);
        const double in_dbm = mw_to_dbm(source_agg_mw);
        const double out_dbm = in_dbm + chain.amplifier.gain_db(in_dbm);
        chain.a_tx_db = out_dbm - chain.ce_t.classical_express_loss_db -
                        config.plan.aggregate_launch_dbm;
        if (chain.a_tx_db < 0.0)
            throw ConfigError(
                "link: aggregate launch target exceeds the boosted power available");
    }
    return chain;
}

OperatingPoint assemble_operating_point(const ScenarioConfig& config) {
    const ChannelPlan plan = assemble_plan(config);
    const LinkChain chain = assemble_chain(config);
    const QuantumPathResult qp = evaluate_quantum_path(chain, plan);
    OperatingPoint op;
    op.mu = config.cow.mean_photon_number;
    op.link_loss_db = qp.loss_db;
    op.noise_flux = qp.noise.total();
    op.spad = config.cow.spad;
    op.data_branch = config.cow.data_branch;
    op.intrinsic_qber = config.cow.intrinsic_qber;
    op.intrinsic_visibility = config.cow.intrinsic_visibility;
    op.decoy_fraction = config.cow.decoy_fraction;
    op.monitor_duty = config.cow.monitor_duty;
    return op;
}

ScenarioResult run_scenario(const ScenarioConfig& config, Exec exec) {
    const ChannelPlan plan = assemble_plan(config);
    const LinkChain chain = assemble_chain(config);
    const QuantumPathResult qp = evaluate_quantum_path(chain, plan);
    const FrameSpec spec(config.cow.slot_rate_hz, config.cow.frame_rate_hz);

    OperatingPoint op;
    op.mu = config.cow.mean_photon_number;
    op.link_loss_db = qp.loss_db;
    op.noise_flux = qp.noise.total();
    op.spad = config.cow.spad;
    op.data_branch = config.cow.data_branch;
    op.intrinsic_qber = config.cow.intrinsic_qber;
    op.intrinsic_visibility = config.cow.intrinsic_visibility;
    op.decoy_fraction = config.cow.decoy_fraction;
    op.monitor_duty = config.cow.monitor_duty;

    const CowRates rates = expected_rates(op, spec);
    const auto& dist = config.distillation;

    ScenarioResult result;
    result.channel_count = plan.classical_count();
    result.aggregate_dbm = result.channel_count > 0
                               ? config.plan.aggregate_launch_dbm
                               : -std::numeric_limits<double>::infinity();
    result.a_tx_db = chain.a_tx_db;
    result.loss_db = qp.loss_db;
    result.noise = qp.noise;
    result.backend = config.backend.type;
    result.seed = config.backend.seed;

    if (config.backend.type == "analytic") {
        ParamEstimate est;
        est.qber_est = rates.qber;
        est.visibility_est = rates.visibility;
        result.r_sift_hz = rates.r_sift;
        result.qber = rates.qber;
        result.visibility = rates.visibility;
        result.skr_bps = secure_key_rate(rates.r_sift, est, dist.sample_fraction,
                                         dist.error_correction_efficiency,
                                         dist.secret_fraction_strategy);
    } else {
        SplitMix64 sm(config.backend.seed);
        const std::uint64_t alice_seed = sm.next();
        const std::uint64_t bob_seed = sm.next();
        const std::uint64_t est_seed = sm.next();
        const std::uint64_t pa_seed = sm.next();

        const AliceRecord alice =
            alice_generate(config.backend.frames, spec, op.decoy_fraction, op.mu, alice_seed);
        const BobReport report = bob_receive(alice, op, spec, bob_seed, exec);
        frame_sync(report, alice);
        auto [key_alice, key_bob] = sift(alice, report);

        const double duration_s = config.backend.frames * spec.frame_duration_s();
        result.r_sift_hz = static_cast<double>(key_alice.bits.size()) / duration_s;

        MonitorSummary monitor;
        monitor.clicks = report.monitor.size();
        monitor.duration_s = duration_s;
        monitor.reference_rate_hz = 0.5 * (rates.r_int + rates.r_bg_mon);

        ParamEstimate est = estimate(key_alice, key_bob, monitor, dist.sample_fraction,
                                     est_seed, dist.estimation_floor_bits);
        result.qber = est.qber_est;
        result.visibility = est.visibility_est;
        result.skr_bps = secure_key_rate(result.r_sift_hz, est, dist.sample_fraction,
                                         dist.error_correction_efficiency,
                                         dist.secret_fraction_strategy);

        const double fraction =
            secret_fraction(est.qber_est, est.visibility_est,
                            dist.error_correction_efficiency,
                            dist.secret_fraction_strategy);
        const auto out_bits = static_cast<std::size_t>(
            std::floor(fraction * static_cast<double>(key_alice.bits.size())));
        result.secure_key = privacy_amplify(key_alice.bits, out_bits, pa_seed, exec);
        result.secure_key_bits = out_bits;
    }

    ReceiverModel rx{config.receiver.nep_mw, config.receiver.sensitivity_spread_db};
    const auto offsets = rx.channel_offsets(result.channel_count);
    const auto classical = plan.classical();
    for (std::size_t i = 0; i < classical.size(); ++i) {
        const double rop = evaluate_classical_path(chain, plan, *classical[i]);
        result.ber_per_channel.push_back(ber(rop, rx, offsets[i]));
    }
    return result;
}

std::vector<ScenarioResult> run_sweep(const ScenarioConfig& config, Exec exec) {
    struct Point {
        std::size_t count;
        double power;
    };
    std::vector<Point> points;
    auto counts = config.sweep.channel_counts;
    auto powers = config.sweep.aggregate_powers_dbm;
    if (counts.empty() || powers.empty())
        throw ConfigError("sweep: axes must be non-empty");
    std::sort(counts.begin(), counts.end());
    std::sort(powers.begin(), powers.end());
    for (std::size_t c : counts)
        for (double p : powers) points.push_back({c, p});

    std::vector<ScenarioResult> table(points.size());
    const bool parallel = exec == Exec::Parallel;
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(points.size()); ++i) {
        ScenarioConfig point_config = config;
        point_config.plan.channel_count = points[i].count;
        point_config.plan.aggregate_launch_dbm = points[i].power;
        point_config.backend.seed =
            derive_seed(config.backend.seed, static_cast<std::uint64_t>(i));
        // Nested parallelism is off; the per-point Monte-Carlo runs serially
        // inside a parallel sweep.
        table[i] = run_scenario(point_config, exec);
    }
    return table;
}

CalibrationAnchors CalibrationAnchors::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("anchors: cannot open " + path);
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("anchors: JSON parse error: ") + e.what());
    }
    CalibrationAnchors anchors;
    try {
        check_keys(root, "$", {"qber", "skr_ratio"});
        if (!root.contains("qber"))
            throw ConfigError("anchors: the qber anchor is required");
        const auto& q = root.at("qber");
        check_keys(q, "qber", {"aggregate_dbm", "channel_count", "value"});
        maybe(q, "aggregate_dbm", anchors.qber_aggregate_dbm);
        maybe(q, "channel_count", anchors.qber_channel_count);
        maybe(q, "value", anchors.qber_value);
        if (root.contains("skr_ratio")) {
            anchors.has_skr_ratio = true;
            const auto& r = root.at("skr_ratio");
            check_keys(r, "skr_ratio",
                       {"high_dbm", "low_dbm", "channel_count", "value"});
            maybe(r, "high_dbm", anchors.ratio_high_dbm);
            maybe(r, "low_dbm", anchors.ratio_low_dbm);
            maybe(r, "channel_count", anchors.ratio_channel_count);
            maybe(r, "value", anchors.skr_ratio);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("anchors: ") + e.what());
    }
    return anchors;
}

namespace {

double analytic_qber_at(const ScenarioConfig& base, double scatter_fraction,
                        double aggregate_dbm, std::size_t channels) {
    ScenarioConfig cfg = base;
    cfg.link.ce_t.scatter_fraction = scatter_fraction;
    cfg.plan.aggregate_launch_dbm = aggregate_dbm;
    cfg.plan.channel_count = channels;
    cfg.backend.type = "analytic";
    return run_scenario(cfg, Exec::Serial).qber;
}

double analytic_skr_at(const ScenarioConfig& base, double monitor_duty,
                       double aggregate_dbm, std::size_t channels) {
    ScenarioConfig cfg = base;
    cfg.cow.monitor_duty = monitor_duty;
    cfg.plan.aggregate_launch_dbm = aggregate_dbm;
    cfg.plan.channel_count = channels;
    cfg.backend.type = "analytic";
    return run_scenario(cfg, Exec::Serial).skr_bps;
}

}  // namespace

CalibrationReport calibrate(const ScenarioConfig& config, const CalibrationAnchors& anchors) {
    CalibrationReport report;
    report.config = config;

    const double target_q = anchors.qber_value;
    auto qber_of = [&](double sigma) {
        return analytic_qber_at(config, sigma, anchors.qber_aggregate_dbm,
                                anchors.qber_channel_count);
    };

    double sigma = config.link.ce_t.scatter_fraction;
    if (std::fabs(qber_of(sigma) - target_q) > 1e-4) {
        double lo = 1e-18, hi = 1e-6;
        if (qber_of(lo) > target_q)
            throw AnchorUnreachableError(
                "calibrate: anchor QBER below the zero-scatter floor");
        if (qber_of(hi) < target_q)
            throw AnchorUnreachableError(
                "calibrate: anchor QBER above the bracket ceiling");
        for (int i = 0; i < 200 && hi / lo > 1.0 + 1e-14; ++i) {
            const double mid = std::sqrt(lo * hi);
            if (qber_of(mid) < target_q)
                lo = mid;
            else
                hi = mid;
        }
        sigma = std::sqrt(lo * hi);
    }
    report.config.link.ce_t.scatter_fraction = sigma;
    report.scatter_fraction = sigma;
    report.achieved_qber = qber_of(sigma);

    double duty = config.cow.monitor_duty;
    if (anchors.has_skr_ratio) {
        const double target_r = anchors.skr_ratio;
        auto ratio_below_target = [&](double d) {
            const double low = analytic_skr_at(report.config, d, anchors.ratio_low_dbm,
                                               anchors.ratio_channel_count);
            const double high = analytic_skr_at(report.config, d, anchors.ratio_high_dbm,
                                                anchors.ratio_channel_count);
            if (low <= 0.0) return true;  // visibility floor: duty too small
            return high / low < target_r;
        };
        auto ratio_of = [&](double d) {
            const double low = analytic_skr_at(report.config, d, anchors.ratio_low_dbm,
                                               anchors.ratio_channel_count);
            const double high = analytic_skr_at(report.config, d, anchors.ratio_high_dbm,
                                                anchors.ratio_channel_count);
            return low > 0.0 ? high / low : 0.0;
        };
        if (std::fabs(ratio_of(duty) - target_r) > 1e-3 * target_r) {
            // ratio(duty) rises from 0 toward its duty=1 plateau.
            double lo = 1e-6, hi = 1.0;
            if (!ratio_below_target(lo))
                throw AnchorUnreachableError(
                    "calibrate: SKR ratio anchor below the reachable range");
            if (ratio_below_target(hi))
                throw AnchorUnreachableError(
                    "calibrate: SKR ratio anchor unreachable at full monitor duty");
            for (int i = 0; i < 200 && hi / lo > 1.0 + 1e-14; ++i) {
                const double mid = std::sqrt(lo * hi);
                if (ratio_below_target(mid))
                    lo = mid;
                else
                    hi = mid;
            }
            duty = std::sqrt(lo * hi);
        }
        report.config.cow.monitor_duty = duty;
        report.achieved_skr_ratio = ratio_of(duty);
        report.ratio_fitted = true;
    }
    report.monitor_duty = duty;
    return report;
}

void emit_csv(const std::vector<ScenarioResult>& table, std::ostream& out) {
    if (table.empty()) throw ConfigError("emit_csv: empty table");
    std::size_t max_channels = 0;
    for (const auto& row : table)
        max_channels = std::max(max_channels, row.ber_per_channel.size());

    out << "channel_count,aggregate_dbm,a_tx_db,loss_db,spr_flux,ase_flux,"
           "scatter_flux,total_noise_flux,r_sift_hz,qber,visibility,skr_bps,"
           "secure_key_bits,backend,seed";
    for (std::size_t i = 0; i < max_channels; ++i) out << ",ber_ch" << (i + 1);
    out << "\n";
    for (const auto& row : table) {
        out << row.channel_count << "," << format_g6(row.aggregate_dbm) << ","
            << format_g6(row.a_tx_db) << "," << format_g6(row.loss_db) << ","
            << format_g6(row.noise.spr_flux) << "," << format_g6(row.noise.ase_flux)
            << "," << format_g6(row.noise.scatter_flux) << ","
            << format_g6(row.noise.total()) << "," << format_g6(row.r_sift_hz) << ","
            << format_g6(row.qber) << "," << format_g6(row.visibility) << ","
            << format_g6(row.skr_bps) << "," << row.secure_key_bits << ","
            << row.backend << "," << row.seed;
        for (std::size_t i = 0; i < max_channels; ++i) {
            out << ",";
            if (i < row.ber_per_channel.size()) out << format_g6(row.ber_per_channel[i]);
        }
        out << "\n";
    }
}

void emit_csv(const std::vector<ScenarioResult>& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("emit_csv: cannot write " + path);
    emit_csv(table, out);
}

void write_meta(const ScenarioConfig& config, const std::string& csv_path) {
    std::string meta_path = csv_path;
    if (meta_path.size() > 4 && meta_path.substr(meta_path.size() - 4) == ".csv")
        meta_path = meta_path.substr(0, meta_path.size() - 4);
    meta_path += ".meta.json";
    json meta = {{"tool_version", kToolVersion},
                 {"config_hash", config.hash()},
                 {"seed", config.backend.seed},
                 {"backend", config.backend.type},
                 {"calibration",
                  {{"scatter_fraction", config.link.ce_t.scatter_fraction},
                   {"monitor_duty", config.cow.monitor_duty}}}};
    std::ofstream out(meta_path, std::ios::binary);
    if (!out) throw ConfigError("write_meta: cannot write " + meta_path);
    out << meta.dump(2) << "\n";
}

std::string aes_budget_note(double link_capacity_bps) {
    const double required = aes_budget(link_capacity_bps);
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "note: NIST AES-256 key renewal (one 256-bit key per 64 GByte) "
                  "needs %.1f bit/s of key for %.0f Gb/s of traffic; a 65 bit/s "
                  "secure-key rate covers only %.0f Gb/s of that load.",
                  required, link_capacity_bps / 1e9,
                  65.0 / 256.0 * 8.0 * 64e9 / 1e9);
    return buf;
}

}  // namespace hcqkd
