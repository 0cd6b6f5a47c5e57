#include "ccotdr/dsp.hpp"

#include "ccotdr/fft.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ccotdr {

namespace {

constexpr double kPowerFloor = 1e-300;

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

Eigen::VectorXd cell_power(const Waterfall& w) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(w.cells());
    for (const auto& plane : w.planes) p += plane.cwiseAbs2().cast<double>().colwise().mean().transpose();
    return p;
}

// Removes the least-squares line.
Eigen::VectorXd detrend(const Eigen::VectorXd& y) {
    const Eigen::Index n = y.size();
    if (n < 2) return y.array() - y.mean();
    const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(n, 0.0, static_cast<double>(n - 1));
    const double tm = t.mean();
    const double ym = y.mean();
    const double slope = ((t.array() - tm) * (y.array() - ym)).sum() / (t.array() - tm).square().sum();
    return (y.array() - ym - slope * (t.array() - tm)).matrix();
}

Eigen::VectorXd hann(Eigen::Index n) {
    if (n == 1) return Eigen::VectorXd::Ones(1);
    return Eigen::VectorXd::NullaryExpr(n, [n](Eigen::Index i) {
        return 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n - 1));
    });
}

// One-sided power spectrum |X_k|^2 of x zero-padded to nfft, bins 0..nfft/2.
Eigen::VectorXd power_spectrum(const Eigen::VectorXd& x, Eigen::Index nfft) {
    PlannedFft<double> fft(nfft);
    ComplexVector<double> in = ComplexVector<double>::Zero(nfft);
    in.head(x.size()) = x.cast<cdouble>();
    ComplexVector<double> out(nfft);
    fft.forward(out, in);
    return out.head(nfft / 2 + 1).cwiseAbs2();
}

// Vertex offset in (-0.5, 0.5) of the parabola through three samples.
double parabolic_offset(double left, double centre, double right) {
    const double denom = left - 2.0 * centre + right;
    if (denom == 0.0) return 0.0;
    return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
}

double safe_log(double p) { return std::log(std::max(p, kPowerFloor)); }

// Unwraps the confident samples, then fills flagged ones by linear
// interpolation in time.
Eigen::VectorXd unwrap_with_gaps(const Eigen::VectorXd& wrapped,
                                 const Eigen::Array<bool, Eigen::Dynamic, 1>& flagged) {
    const Eigen::Index n = wrapped.size();
    std::vector<Eigen::Index> good;
    good.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!flagged[i]) good.push_back(i);
    }
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    if (good.empty()) return out;
    double prev = wrapped[good.front()];
    out[good.front()] = prev;
    for (std::size_t k = 1; k < good.size(); ++k) {
        const double v = prev + wrap_phase(wrapped[good[k]] - wrapped[good[k - 1]]);
        out[good[k]] = v;
        prev = v;
    }
    for (Eigen::Index i = 0; i < good.front(); ++i) out[i] = out[good.front()];
    for (Eigen::Index i = good.back() + 1; i < n; ++i) out[i] = out[good.back()];
    for (std::size_t k = 1; k < good.size(); ++k) {
        const Eigen::Index a = good[k - 1];
        const Eigen::Index b = good[k];
        for (Eigen::Index i = a + 1; i < b; ++i) {
            const double f = static_cast<double>(i - a) / static_cast<double>(b - a);
            out[i] = out[a] + f * (out[b] - out[a]);
        }
    }
    return out;
}

PhaseSeries differential_phase_impl(const Waterfall& near, Eigen::Index c1, int pol1,
                                    const Waterfall& far, Eigen::Index c2, int pol2, double z1,
                                    double z2, double noise_floor_power) {
    const Eigen::Index rows = near.rows();
    const auto& p1 = near.planes[static_cast<std::size_t>(pol1)];
    const auto& p2 = far.planes[static_cast<std::size_t>(pol2)];
    Eigen::VectorXd wrapped(rows);
    Eigen::Array<bool, Eigen::Dynamic, 1> flagged(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const cfloat s1 = p1(r, c1);
        const cfloat s2 = p2(r, c2);
        const cdouble prod = cdouble(s2) * std::conj(cdouble(s1));
        wrapped[r] = std::arg(prod);
        flagged[r] = std::norm(s1) < noise_floor_power || std::norm(s2) < noise_floor_power;
    }
    PhaseSeries out;
    out.values = unwrap_with_gaps(wrapped, flagged);
    out.low_confidence = flagged;
    out.sample_period = near.row_period;
    out.t0 = rows > 0 ? near.timestamps[0] : 0.0;
    out.z1 = z1;
    out.z2 = z2;
    return out;
}

}  // namespace

Eigen::VectorXd mean_power_trace(const Waterfall& w) {
    if (w.rows() < 1) throw SizeError("mean_power_trace: empty waterfall");
    return cell_power(w).unaryExpr([](double p) { return 10.0 * std::log10(std::max(p, kPowerFloor)); });
}

Eigen::MatrixXf amplitude_change_map(const Waterfall& w) {
    if (w.rows() < 2) throw SizeError("amplitude_change_map: needs at least two rows");
    Eigen::MatrixXf power = Eigen::MatrixXf::Zero(w.rows(), w.cells());
    for (const auto& plane : w.planes) power += plane.cwiseAbs2();
    const Eigen::MatrixXf amplitude = power.cwiseSqrt();
    const Eigen::Index n = w.rows() - 1;
    return (amplitude.bottomRows(n) - amplitude.topRows(n)).cwiseAbs();
}

std::vector<Gauge> select_gauges(const Eigen::VectorXd& power_db, double position_step,
                                 double origin, double min_margin_db, double gauge_length,
                                 Eigen::Index median_window) {
    if (!(gauge_length >= position_step * (1.0 - 1e-9))) {
        throw RangeError("select_gauges: gauge length below position step");
    }
    const Eigen::Index n = power_db.size();
    std::vector<Eigen::Index> picks;
    if (min_margin_db <= 0.0) {
        for (Eigen::Index i = 0; i < n; ++i) picks.push_back(i);
    } else {
        const Eigen::Index half = std::max<Eigen::Index>(median_window / 2, 1);
        std::vector<double> window;
        Eigen::Index run_best = -1;
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::Index lo = std::max<Eigen::Index>(0, i - half);
            const Eigen::Index hi = std::min<Eigen::Index>(n - 1, i + half);
            window.assign(power_db.data() + lo, power_db.data() + hi + 1);
            const bool above = power_db[i] > median_of(window) + min_margin_db;
            if (above) {
                if (run_best < 0 || power_db[i] > power_db[run_best]) run_best = i;
            } else if (run_best >= 0) {
                picks.push_back(run_best);
                run_best = -1;
            }
        }
        if (run_best >= 0) picks.push_back(run_best);
    }
    if (picks.empty()) throw DetectionError("select_gauges: no cell exceeds the margin");

    const double min_cells = gauge_length / position_step - 1e-6;
    std::vector<Gauge> gauges;
    std::size_t i = 0;
    while (i < picks.size()) {
        std::size_t j = i + 1;
        while (j < picks.size() && static_cast<double>(picks[j] - picks[i]) < min_cells) ++j;
        if (j >= picks.size()) break;
        gauges.push_back({origin + static_cast<double>(picks[i]) * position_step,
                          origin + static_cast<double>(picks[j]) * position_step});
        i = j;
    }
    if (gauges.empty()) throw DetectionError("select_gauges: fewer than two qualifying positions");
    return gauges;
}

double wrap_phase(double x) {
    double r = std::remainder(x, 2.0 * kPi);  // [-pi, pi]
    if (r <= -kPi) r += 2.0 * kPi;
    return r;
}

Eigen::VectorXd unwrap(const Eigen::VectorXd& phase) {
    Eigen::VectorXd out = phase;
    for (Eigen::Index i = 1; i < phase.size(); ++i) {
        out[i] = out[i - 1] + wrap_phase(phase[i] - phase[i - 1]);
    }
    return out;
}

Eigen::VectorXi dominant_polarization(const Waterfall& w) {
    Eigen::VectorXi pick = Eigen::VectorXi::Zero(w.cells());
    if (w.planes.size() < 2) return pick;
    const Eigen::VectorXd px = w.planes[0].cwiseAbs2().cast<double>().colwise().sum().transpose();
    const Eigen::VectorXd py = w.planes[1].cwiseAbs2().cast<double>().colwise().sum().transpose();
    for (Eigen::Index c = 0; c < w.cells(); ++c) pick[c] = py[c] > px[c] ? 1 : 0;
    return pick;
}

PhaseSeries differential_phase(const Waterfall& w, double z1, double z2, double noise_floor_power) {
    return differential_phase(w, w, z1, z2, noise_floor_power);
}

PhaseSeries differential_phase(const Waterfall& near, const Waterfall& far, double z1, double z2,
                               double noise_floor_power) {
    if (!(z1 < z2)) throw RangeError("differential_phase: z1 must be < z2");
    if (near.rows() != far.rows()) throw GeometryError("differential_phase: row counts differ");
    const Eigen::Index c1 = near.cell_index(z1);
    const Eigen::Index c2 = far.cell_index(z2);
    const int pol1 = dominant_polarization(near)[c1];
    const int pol2 = dominant_polarization(far)[c2];
    return differential_phase_impl(near, c1, pol1, far, c2, pol2, z1, z2, noise_floor_power);
}

PhaseSeries to_path_phase(PhaseSeries p) {
    p.values = -p.values;
    return p;
}

std::optional<Tone> detect_tone(const PhaseSeries& p) {
    const Eigen::Index n = p.size();
    if (n < 64) throw SizeError("detect_tone: needs at least 64 samples");
    if (!(p.sample_period > 0.0)) throw RangeError("detect_tone: sample period must be > 0");
    const Eigen::VectorXd w = hann(n);
    const Eigen::VectorXd x = detrend(p.values).cwiseProduct(w);
    // A constant or straight-line series leaves only rounding residue.
    if (x.squaredNorm() <= 1e-24 * std::max(1.0, p.values.squaredNorm())) return std::nullopt;
    const Eigen::Index nfft = next_pow2(2 * n);
    const Eigen::VectorXd spec = power_spectrum(x, nfft);
    const Eigen::Index bins = spec.size();

    Eigen::Index k = 1;
    for (Eigen::Index i = 2; i < bins; ++i) {
        if (spec[i] > spec[k]) k = i;
    }
    std::vector<double> rest(spec.data() + 1, spec.data() + bins);
    const double med = median_of(rest);
    if (!(spec[k] > 0.0) || spec[k] < 4.0 * med) return std::nullopt;

    double delta = 0.0;
    if (k > 1 && k + 1 < bins) {
        delta = parabolic_offset(safe_log(spec[k - 1]), safe_log(spec[k]), safe_log(spec[k + 1]));
    }
    const double fs = 1.0 / p.sample_period;
    Tone tone;
    tone.frequency = (static_cast<double>(k) + delta) * fs / static_cast<double>(nfft);
    const double amplitude = 2.0 * std::sqrt(spec[k]) / w.sum();
    tone.power = 0.5 * amplitude * amplitude;
    return tone;
}

double tone_power_at(const Eigen::VectorXd& values, double sample_period, double frequency) {
    const Eigen::Index n = values.size();
    if (n == 0) return 0.0;
    const Eigen::VectorXd w = hann(n);
    const Eigen::VectorXd x = detrend(values).cwiseProduct(w);
    const double omega = 2.0 * kPi * frequency * sample_period;
    cdouble acc{};
    const cdouble step = std::polar(1.0, -omega);
    cdouble rot{1.0, 0.0};
    for (Eigen::Index i = 0; i < n; ++i) {
        acc += x[i] * rot;
        rot *= step;
    }
    const double amplitude = 2.0 * std::abs(acc) / w.sum();
    return 0.5 * amplitude * amplitude;
}

double localize_tone(const Waterfall& w, double frequency, double gauge_length,
                     const LocalizeOptions& options) {
    if (w.rows() < 64) throw SizeError("localize_tone: needs at least 64 rows");
    if (!(frequency > 0.0) || frequency >= 0.5 / w.row_period) {
        throw RangeError("localize_tone: frequency " + std::to_string(frequency) +
                         " Hz not below Nyquist of the row rate");
    }
    const auto span = static_cast<Eigen::Index>(std::llround(gauge_length / w.position_step));
    if (span < 1 || span >= w.cells()) throw RangeError("localize_tone: gauge length out of range");

    const Eigen::VectorXd power = cell_power(w);
    std::vector<double> all(power.data(), power.data() + power.size());
    const double usable = median_of(all) * std::pow(10.0, options.min_cell_power_db / 10.0);
    const Eigen::VectorXi pol = dominant_polarization(w);

    double best_power = -1.0;
    Eigen::Index best = -1;
    for (Eigen::Index c1 = 0; c1 + span < w.cells(); ++c1) {
        const Eigen::Index c2 = c1 + span;
        if (power[c1] < usable || power[c2] < usable) continue;
        const PhaseSeries p = differential_phase_impl(w, c1, pol[c1], w, c2, pol[c2], w.position(c1),
                                                      w.position(c2), options.noise_floor_power);
        const double tp = tone_power_at(p.values, w.row_period, frequency);
        if (tp > best_power) {
            best_power = tp;
            best = c1;
        }
    }
    if (best < 0 || !(best_power > 0.0)) {
        throw DetectionError("localize_tone: no gauge carries power at " + std::to_string(frequency) + " Hz");
    }

    // The winning gauge must show the tone 6 dB above its own spectral median.
    const PhaseSeries winner = differential_phase_impl(w, best, pol[best], w, best + span,
                                                       pol[best + span], w.position(best),
                                                       w.position(best + span),
                                                       options.noise_floor_power);
    const Eigen::Index n = winner.size();
    const Eigen::VectorXd x = detrend(winner.values).cwiseProduct(hann(n));
    const Eigen::Index nfft = next_pow2(2 * n);
    const Eigen::VectorXd spec = power_spectrum(x, nfft);
    std::vector<double> rest(spec.data() + 1, spec.data() + spec.size());
    const double med = median_of(rest);
    const auto k = static_cast<Eigen::Index>(
        std::llround(frequency * w.row_period * static_cast<double>(nfft)));
    double peak = 0.0;
    for (Eigen::Index i = std::max<Eigen::Index>(1, k - 1); i <= std::min<Eigen::Index>(spec.size() - 1, k + 1); ++i) {
        peak = std::max(peak, spec[i]);
    }
    if (peak < 4.0 * med) {
        throw DetectionError("localize_tone: strongest gauge is below the detection threshold");
    }
    return 0.5 * (w.position(best) + w.position(best + span));
}

double phase_to_strain(double path_phase, double gauge, const SensingConstants& constants,
                       double wavelength, double group_index) {
    if (!(gauge > 0.0)) throw RangeError("phase_to_strain: gauge must be > 0");
    return path_phase * wavelength /
           (2.0 * kPi * group_index * constants.strain_optic_factor * gauge *
            convention_factor(constants.convention));
}

double strain_to_phase(double strain, double gauge, const SensingConstants& constants,
                       double wavelength, double group_index) {
    return strain * 2.0 * kPi * group_index * constants.strain_optic_factor * gauge *
           convention_factor(constants.convention) / wavelength;
}

SampledSeries phase_slope(const PhaseSeries& p, double window) {
    if (!(p.sample_period > 0.0)) throw RangeError("phase_slope: sample period must be > 0");
    const auto per = static_cast<Eigen::Index>(std::llround(window / p.sample_period));
    if (per < 10) throw RangeError("phase_slope: window shorter than 10 sample periods");
    const Eigen::Index count = p.size() / per;
    SampledSeries out;
    out.values.resize(count);
    out.sample_period = static_cast<double>(per) * p.sample_period;
    out.t0 = p.t0 + 0.5 * static_cast<double>(per - 1) * p.sample_period;
    const Eigen::ArrayXd t =
        Eigen::ArrayXd::LinSpaced(per, 0.0, static_cast<double>(per - 1)) * p.sample_period;
    const Eigen::ArrayXd tc = t - t.mean();
    const double denom = tc.square().sum();
    for (Eigen::Index k = 0; k < count; ++k) {
        const Eigen::ArrayXd y = p.values.segment(k * per, per).array();
        out.values[k] = (tc * (y - y.mean())).sum() / denom;
    }
    return out;
}

TemperatureSeries core_temperature_series(const SampledSeries& slopes, double span_length,
                                          double wavelength, double dn_dT,
                                          PhaseConvention convention,
                                          double start_temperature) {
    if (!(span_length > 0.0)) throw RangeError("core_temperature_series: span length must be > 0");
    if (!(dn_dT > 0.0)) throw RangeError("core_temperature_series: dn/dT must be > 0");
    const double scale =
        wavelength / (2.0 * kPi * span_length * dn_dT * convention_factor(convention));
    const Eigen::VectorXd rate = slopes.values * scale;
    TemperatureSeries out;
    out.kind = TemperatureKind::core;
    out.sample_period = slopes.sample_period;
    out.t0 = slopes.t0;
    out.values.resize(rate.size());
    if (rate.size() == 0) return out;
    out.values[0] = start_temperature;
    for (Eigen::Index i = 1; i < rate.size(); ++i) {
        out.values[i] = out.values[i - 1] + 0.5 * (rate[i - 1] + rate[i]) * slopes.sample_period;
    }
    return out;
}

TemperatureSeries inverse_filter_chamber(const TemperatureSeries& core, double time_constant,
                                         int smoothing) {
    if (!(time_constant > 0.0)) throw RangeError("inverse_filter_chamber: tau must be > 0");
    const Eigen::Index n = core.size();
    TemperatureSeries out = core;
    out.kind = TemperatureKind::chamber_estimate;
    if (n < 2) return out;

    const Eigen::Index half = std::max(smoothing, 1) / 2;
    Eigen::VectorXd smooth(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, i - half);
        const Eigen::Index hi = std::min<Eigen::Index>(n - 1, i + half);
        smooth[i] = core.values.segment(lo, hi - lo + 1).mean();
    }
    const double dt = core.sample_period;
    Eigen::VectorXd deriv(n);
    deriv[0] = (smooth[1] - smooth[0]) / dt;
    deriv[n - 1] = (smooth[n - 1] - smooth[n - 2]) / dt;
    for (Eigen::Index i = 1; i + 1 < n; ++i) deriv[i] = (smooth[i + 1] - smooth[i - 1]) / (2.0 * dt);
    out.values = core.values + time_constant * deriv;
    return out;
}

std::vector<FbgSpectrum> fbg_spectra(std::span<const SweepPoint> sweep,
                                     std::span<const double> grating_positions,
                                     double resolution) {
    if (sweep.size() < 3) throw SizeError("fbg_spectra: needs at least three wavelengths");
    std::vector<double> sorted(grating_positions.begin(), grating_positions.end());
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i] - sorted[i - 1] < resolution) {
            throw GeometryError("fbg_spectra: grating spacing " +
                                std::to_string(sorted[i] - sorted[i - 1]) +
                                " m below resolution " + std::to_string(resolution) + " m");
        }
    }
    const auto m = static_cast<Eigen::Index>(sweep.size());
    std::vector<FbgSpectrum> out;
    out.reserve(grating_positions.size());
    for (std::size_t g = 0; g < grating_positions.size(); ++g) {
        FbgSpectrum s;
        s.grating_index = static_cast<int>(g);
        s.position = grating_positions[g];
        s.wavelengths.resize(m);
        s.powers.resize(m);
        for (Eigen::Index k = 0; k < m; ++k) {
            const auto& pt = sweep[static_cast<std::size_t>(k)];
            const auto& prof = pt.profile;
            const auto c = static_cast<Eigen::Index>(
                std::llround((s.position - prof.origin) / prof.position_step));
            double best = 0.0;
            for (Eigen::Index i = std::max<Eigen::Index>(0, c - 1);
                 i <= std::min<Eigen::Index>(prof.size() - 1, c + 1); ++i) {
                best = std::max(best, static_cast<double>(prof.samples.row(i).cwiseAbs2().sum()));
            }
            s.wavelengths[k] = pt.wavelength;
            s.powers[k] = best;
        }
        Eigen::Index k;
        s.powers.maxCoeff(&k);
        s.bragg_estimate = s.wavelengths[k];
        if (k > 0 && k + 1 < m) {
            // Vertex of the parabola through the three log-power samples.
            const double x0 = s.wavelengths[k - 1], x1 = s.wavelengths[k], x2 = s.wavelengths[k + 1];
            const double y0 = safe_log(s.powers[k - 1]), y1 = safe_log(s.powers[k]),
                         y2 = safe_log(s.powers[k + 1]);
            const double d1 = (y1 - y0) / (x1 - x0);
            const double d2 = (y2 - y1) / (x2 - x1);
            const double curv = (d2 - d1) / (x2 - x0);
            if (curv < 0.0) {
                const double vertex = 0.5 * (x0 + x1) - d1 / (2.0 * curv);
                s.bragg_estimate = std::clamp(vertex, x0, x2);
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::optional<double> bragg_periodicity(const Eigen::VectorXd& bragg_estimates) {
    const Eigen::Index n = bragg_estimates.size();
    if (n < 6) throw SizeError("bragg_periodicity: needs at least six gratings");
    const Eigen::VectorXd x =
        (bragg_estimates.array() - bragg_estimates.mean()).matrix().cwiseProduct(hann(n));
    const Eigen::Index nfft = next_pow2(8 * n);
    const Eigen::VectorXd spec = power_spectrum(x, nfft);
    Eigen::Index k = 1;
    for (Eigen::Index i = 2; i < spec.size(); ++i) {
        if (spec[i] > spec[k]) k = i;
    }
    std::vector<double> rest(spec.data() + 1, spec.data() + spec.size());
    const double med = median_of(rest);
    if (!(spec[k] > 0.0) || spec[k] < 4.0 * med) return std::nullopt;
    double delta = 0.0;
    if (k + 1 < spec.size()) {
        delta = parabolic_offset(safe_log(spec[k - 1]), safe_log(spec[k]), safe_log(spec[k + 1]));
    }
    const double period = static_cast<double>(nfft) / (static_cast<double>(k) + delta);
    if (period > static_cast<double>(n) / 3.0) return std::nullopt;
    return period;
}

std::vector<double> find_peaks(const Eigen::VectorXd& power, double position_step, double origin,
                               double z_start, double z_end, double threshold) {
    std::vector<double> peaks;
    for (Eigen::Index i = 1; i + 1 < power.size(); ++i) {
        const double z = origin + static_cast<double>(i) * position_step;
        if (z < z_start || z >= z_end) continue;
        if (power[i] > threshold && power[i] > power[i - 1] && power[i] >= power[i + 1]) {
            peaks.push_back(z);
        }
    }
    return peaks;
}

}  // namespace ccotdr
