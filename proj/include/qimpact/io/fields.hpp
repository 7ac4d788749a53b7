// Named-field visitors. Manifests and config files both walk these, so every
// configuration key has exactly one spelling.
#pragma once

#include <concepts>
#include <type_traits>

#include "qimpact/detector.hpp"
#include "qimpact/simulator.hpp"
#include "qimpact/tls.hpp"

namespace qimpact::io {

template <class Cfg, class V>
    requires std::same_as<std::remove_const_t<Cfg>, SimConfig>
void visit_fields(Cfg& c, V&& v) {
    v("run_duration", c.run_duration);
    v("n_reps", c.n_reps);
    v("rep_period", c.rep_period);
    v("t_ramsey", c.t_ramsey);
    v("t1_delay", c.t1_delay);
    v("eps_ef_over_2pi", c.eps_ef_over_2pi);
    v("t2_ef", c.t2_ef);
    v("meas_error", c.meas_error);
    v("impact_rate", c.impact_rate);
    v("sigma_spatial", c.sigma_spatial);
    v("peak_dng", c.peak_dng);
    v("diffusion_var_per_hour", c.diffusion_var_per_hour);
    v("baseline_t1", c.baseline_t1);
    v("dip_t1", c.dip_t1);
    v("t1_dip_enabled", c.t1_dip_enabled);
    v("diffusion_block", c.diffusion_block);
    v("seed", c.seed);
}

template <class Cfg, class V>
    requires std::same_as<std::remove_const_t<Cfg>, TlsConfig>
void visit_fields(Cfg& c, V&& v) {
    v("n_steps", c.n_steps);
    v("shift_range", c.shift_range);
    v("stark_detuning", c.stark_detuning);
    v("anharmonicity", c.anharmonicity);
    v("tls_list", c.tls_list);
    v("n_iterations", c.n_iterations);
    v("iteration_period", c.iteration_period);
    v("probe_duration", c.probe_duration);
    v("detector_shots", c.detector_shots);
    v("scramble_fraction", c.scramble_fraction);
    v("scramble_radius_mm", c.scramble_radius_mm);
    v("monitored_qubit", c.monitored_qubit);
    v("diffusing_tls", c.diffusing_tls);
}

template <class Cfg, class V>
    requires std::same_as<std::remove_const_t<Cfg>, DetectorParams>
void visit_fields(Cfg& c, V&& v) {
    v("template_half_width", c.template_half_width);
    v("threshold", c.threshold);
    v("min_separation", c.min_separation);
    v("cluster_gap", c.cluster_gap);
    v("averaged_mode", c.averaged_mode);
    v("averaged_template_len", c.averaged_template_len);
    v("averaged_threshold", c.averaged_threshold);
    v("averaged_min_separation", c.averaged_min_separation);
    v("averaged_cluster_gap", c.averaged_cluster_gap);
    v("excluded_qubits", c.excluded_qubits);
}

} // namespace qimpact::io
