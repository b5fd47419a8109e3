#include "wavecool/nls.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace wavecool {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

/// splitmix64: phases must be a pure function of (seed, member, kx, ky).
std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double mode_phase(std::uint64_t seed, std::size_t member, int kx, int ky) {
    std::uint64_t h = splitmix64(seed ^ 0x77cb3f0a9d11e3a7ULL);
    h = splitmix64(h ^ (static_cast<std::uint64_t>(member) + 1));
    h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(kx)));
    h = splitmix64(h ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(ky)) << 32));
    return kTwoPi * (static_cast<double>(h >> 11) * 0x1.0p-53);
}

int wavenumber(std::size_t idx, std::size_t n) {
    return (idx <= n / 2) ? static_cast<int>(idx) : static_cast<int>(idx) - static_cast<int>(n);
}

/// phi functions of the exponential integrator; series below |z| = 0.5
/// where the direct formulas cancel.
std::complex<double> phi(int order, std::complex<double> z) {
    if (std::abs(z) < 0.5) {
        // phi_m(z) = sum_{j>=0} z^j / (j + m)!
        std::complex<double> term(1.0, 0.0);
        double fact = 1.0;
        for (int j = 1; j <= order; ++j) fact *= j;
        term = 1.0 / fact;
        std::complex<double> sum = term;
        for (int j = 1; j <= 24; ++j) {
            term *= z / static_cast<double>(j + order);
            sum += term;
        }
        return sum;
    }
    const std::complex<double> ez = std::exp(z);
    switch (order) {
        case 1: return (ez - 1.0) / z;
        case 2: return (ez - 1.0 - z) / (z * z);
        default: return (ez - 1.0 - z - 0.5 * z * z) / (z * z * z);
    }
}

struct Plan2d {
    fftw_plan fwd = nullptr, bwd = nullptr;
    std::vector<std::complex<double>> buf;
    std::size_t n = 0;

    void init(std::size_t n_) {
        n = n_;
        buf.resize(n * n);
        auto* p = reinterpret_cast<fftw_complex*>(buf.data());
        // FFTW_MEASURE plans run several times faster than estimated ones on
        // the large padded grids; wisdom makes repeat planning cheap.
        std::lock_guard<std::mutex> lock(fftw_mutex());
        fwd = fftw_plan_dft_2d(static_cast<int>(n), static_cast<int>(n), p, p,
                               FFTW_FORWARD, FFTW_MEASURE);
        bwd = fftw_plan_dft_2d(static_cast<int>(n), static_cast<int>(n), p, p,
                               FFTW_BACKWARD, FFTW_MEASURE);
    }
    ~Plan2d() {
        if (!fwd) return;
        std::lock_guard<std::mutex> lock(fftw_mutex());
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
    }
};

/// Copies spectral coefficients between FFT layouts of sizes n -> m,
/// zeroing everything the source does not provide.
void spread_modes(const std::vector<std::complex<double>>& src, std::size_t n,
                  std::vector<std::complex<double>>& dst, std::size_t m) {
    std::fill(dst.begin(), dst.end(), std::complex<double>(0.0, 0.0));
    for (std::size_t iy = 0; iy < n; ++iy) {
        const int ky = wavenumber(iy, n);
        const std::size_t my = (ky >= 0) ? ky : m + ky;
        for (std::size_t ix = 0; ix < n; ++ix) {
            const int kx = wavenumber(ix, n);
            const std::size_t mx = (kx >= 0) ? kx : m + kx;
            dst[my * m + mx] = src[iy * n + ix];
        }
    }
}

void gather_modes(const std::vector<std::complex<double>>& src, std::size_t m,
                  std::vector<std::complex<double>>& dst, std::size_t n) {
    for (std::size_t iy = 0; iy < n; ++iy) {
        const int ky = wavenumber(iy, n);
        const std::size_t my = (ky >= 0) ? ky : m + ky;
        for (std::size_t ix = 0; ix < n; ++ix) {
            const int kx = wavenumber(ix, n);
            const std::size_t mx = (kx >= 0) ? kx : m + kx;
            dst[iy * n + ix] = src[my * m + mx];
        }
    }
}

void zero_nyquist(std::vector<std::complex<double>>& v, std::size_t n) {
    const std::size_t h = n / 2;
    for (std::size_t i = 0; i < n; ++i) {
        v[h * n + i] = 0.0;
        v[i * n + h] = 0.0;
    }
}

} // namespace

ComplexField init_random_phase(const NlsConfig& cfg, std::size_t member) {
    const std::size_t n = cfg.resolution;
    if (n < 4 || (n & (n - 1)) != 0)
        throw std::invalid_argument("resolution must be a power of two >= 4");
    if (member >= cfg.members)
        throw std::invalid_argument("member index out of range");

    std::vector<std::complex<double>> psi_hat(n * n, {0.0, 0.0});
    for (std::size_t iy = 0; iy < n; ++iy) {
        const int ky = wavenumber(iy, n);
        for (std::size_t ix = 0; ix < n; ++ix) {
            const int kx = wavenumber(ix, n);
            if (kx == 0 && ky == 0) continue; // no condensate mode
            const double k = std::sqrt(double(kx) * kx + double(ky) * ky);
            const double l = std::log(k / cfg.k0);
            const double mag =
                cfg.amplitude * std::exp(-l * l / (2.0 * cfg.sigma_init * cfg.sigma_init));
            const double th = mode_phase(cfg.seed, member, kx, ky);
            psi_hat[iy * n + ix] = std::polar(mag, th);
        }
    }
    zero_nyquist(psi_hat, n);

    Plan2d plan;
    plan.init(n);
    std::copy(psi_hat.begin(), psi_hat.end(), plan.buf.begin());
    fftw_execute(plan.bwd); // unnormalized sum: psi(x) = sum psi_hat e^{ikx}
    ComplexField field(n);
    std::copy(plan.buf.begin(), plan.buf.end(), field.values.begin());
    return field;
}

std::vector<std::complex<double>> dealiased_cubic(
    const std::vector<std::complex<double>>& psi_hat, std::size_t n) {
    if (psi_hat.size() != n * n)
        throw std::invalid_argument("dealiased_cubic: size mismatch");
    const std::size_t m = 2 * n;
    Plan2d plan;
    plan.init(m);
    spread_modes(psi_hat, n, plan.buf, m);
    fftw_execute(plan.bwd);
    for (auto& v : plan.buf) v *= std::norm(v);
    fftw_execute(plan.fwd);
    const double inv = 1.0 / (double(m) * double(m));
    for (auto& v : plan.buf) v *= inv;
    std::vector<std::complex<double>> out(n * n);
    gather_modes(plan.buf, m, out, n);
    zero_nyquist(out, n);
    return out;
}

struct NlsStepper::Impl {
    NlsConfig cfg;
    std::size_t n, m;
    std::vector<double> omega;               // |k|^2 per mode
    std::vector<std::complex<double>> E, E2, Q, f1, f2, f3;
    Plan2d pad;    // zero-padded workspace for the cubic term
    Plan2d base;   // n-grid transforms
    Plan2d wide;   // 2n-grid workspace for the quartic diagnostic

    std::vector<std::complex<double>> Nu, Na, Nb, Nc, a, b, c;

    explicit Impl(const NlsConfig& cfg_) : cfg(cfg_), n(cfg_.resolution), m(2 * n) {
        pad.init(m);
        base.init(n);
        wide.init(2 * n);
        const std::size_t sz = n * n;
        omega.resize(sz);
        E.resize(sz); E2.resize(sz); Q.resize(sz);
        f1.resize(sz); f2.resize(sz); f3.resize(sz);
        Nu.resize(sz); Na.resize(sz); Nb.resize(sz); Nc.resize(sz);
        a.resize(sz); b.resize(sz); c.resize(sz);

        const double h = cfg.dt;
        for (std::size_t iy = 0; iy < n; ++iy) {
            const int ky = wavenumber(iy, n);
            for (std::size_t ix = 0; ix < n; ++ix) {
                const int kx = wavenumber(ix, n);
                const std::size_t i = iy * n + ix;
                const double w = double(kx) * kx + double(ky) * ky;
                omega[i] = w;
                const std::complex<double> L(-cfg.nu * std::pow(w, cfg.dissipation_power), -w);
                const std::complex<double> z = h * L;
                E[i] = std::exp(z);
                E2[i] = std::exp(0.5 * z);
                Q[i] = 0.5 * h * phi(1, 0.5 * z);
                const auto p1 = phi(1, z), p2 = phi(2, z), p3 = phi(3, z);
                f1[i] = h * (p1 - 3.0 * p2 + 4.0 * p3);
                f2[i] = 2.0 * h * (p2 - 2.0 * p3);
                f3[i] = h * (4.0 * p3 - p2);
            }
        }
    }

    /// N(v) = -i |psi|^2 psi, evaluated alias-free on the padded grid.
    void nonlinear(const std::vector<std::complex<double>>& v,
                   std::vector<std::complex<double>>& out) {
        if (cfg.linear_only) {
            std::fill(out.begin(), out.end(), std::complex<double>(0.0, 0.0));
            return;
        }
        spread_modes(v, n, pad.buf, m);
        fftw_execute(pad.bwd);
        for (auto& x : pad.buf) x *= std::norm(x);
        fftw_execute(pad.fwd);
        const double inv = 1.0 / (double(m) * double(m));
        for (auto& x : pad.buf) x *= inv;
        gather_modes(pad.buf, m, out, n);
        zero_nyquist(out, n);
        const std::complex<double> mi(0.0, -1.0);
        for (auto& x : out) x *= mi;
    }
};

NlsStepper::NlsStepper(const NlsConfig& cfg)
    : impl_(std::make_unique<Impl>(cfg)), n_(cfg.resolution) {
    psi_hat_.assign(n_ * n_, {0.0, 0.0});
}

NlsStepper::~NlsStepper() = default;

void NlsStepper::load(const ComplexField& physical) {
    if (physical.n != n_)
        throw std::invalid_argument("NlsStepper::load: resolution mismatch");
    auto& base = impl_->base;
    std::copy(physical.values.begin(), physical.values.end(), base.buf.begin());
    fftw_execute(base.fwd);
    const double inv = 1.0 / (double(n_) * double(n_));
    psi_hat_.resize(n_ * n_);
    for (std::size_t i = 0; i < psi_hat_.size(); ++i) psi_hat_[i] = base.buf[i] * inv;
    zero_nyquist(psi_hat_, n_);
}

ComplexField NlsStepper::physical() const {
    auto& base = impl_->base;
    std::copy(psi_hat_.begin(), psi_hat_.end(), base.buf.begin());
    fftw_execute(base.bwd);
    ComplexField f(n_);
    std::copy(base.buf.begin(), base.buf.end(), f.values.begin());
    return f;
}

void NlsStepper::step() {
    auto& im = *impl_;
    const std::size_t sz = psi_hat_.size();

    double wa_before = 0.0;
    if (im.cfg.nu > 0.0)
        for (std::size_t i = 0; i < sz; ++i) wa_before += 0.5 * std::norm(psi_hat_[i]);

    im.nonlinear(psi_hat_, im.Nu);
    for (std::size_t i = 0; i < sz; ++i)
        im.a[i] = im.E2[i] * psi_hat_[i] + im.Q[i] * im.Nu[i];
    im.nonlinear(im.a, im.Na);
    for (std::size_t i = 0; i < sz; ++i)
        im.b[i] = im.E2[i] * psi_hat_[i] + im.Q[i] * im.Na[i];
    im.nonlinear(im.b, im.Nb);
    for (std::size_t i = 0; i < sz; ++i)
        im.c[i] = im.E2[i] * im.a[i] + im.Q[i] * (2.0 * im.Nb[i] - im.Nu[i]);
    im.nonlinear(im.c, im.Nc);
    for (std::size_t i = 0; i < sz; ++i)
        psi_hat_[i] = im.E[i] * psi_hat_[i] + im.f1[i] * im.Nu[i] +
                      im.f2[i] * (im.Na[i] + im.Nb[i]) + im.f3[i] * im.Nc[i];

    // The cubic term conserves wave action exactly, so the per-step change
    // of (1/2) sum |psi_k|^2 is the hyperviscous loss (to scheme order).
    if (im.cfg.nu > 0.0) {
        double wa_after = 0.0;
        for (std::size_t i = 0; i < sz; ++i) wa_after += 0.5 * std::norm(psi_hat_[i]);
        dissipated_ += wa_before - wa_after;
    }
}

NlsInvariants NlsStepper::invariants(double t) const {
    auto& im = *impl_;
    double wa = 0.0, qe = 0.0;
    for (std::size_t i = 0; i < psi_hat_.size(); ++i) {
        const double p = std::norm(psi_hat_[i]);
        wa += 0.5 * p;
        qe += 0.5 * im.omega[i] * p;
    }
    // Quartic term on a doubled grid: exact quadrature for the truncated field.
    const std::size_t w = 2 * n_;
    spread_modes(psi_hat_, n_, im.wide.buf, w);
    fftw_execute(im.wide.bwd);
    double quart = 0.0;
    for (const auto& v : im.wide.buf) {
        const double p = std::norm(v);
        quart += p * p;
    }
    quart /= double(w) * double(w);
    return {t, wa, qe, qe + 0.25 * quart, dissipated_};
}

std::vector<double> NlsStepper::power() const {
    std::vector<double> p(psi_hat_.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = 0.5 * std::norm(psi_hat_[i]);
    return p;
}

EnsembleSpectrum bin_power(const std::vector<double>& mean_power, std::size_t n,
                           int bins_per_decade, double time) {
    const double w_max = 2.0 * (n / 2.0) * (n / 2.0);
    const int n_bins = static_cast<int>(std::ceil(std::log10(w_max) * bins_per_decade)) + 1;
    std::vector<double> mass(n_bins, 0.0);
    std::vector<long> count(n_bins, 0);
    const double lw = 1.0 / bins_per_decade; // bin width in log10 omega, edges from 1
    for (std::size_t iy = 0; iy < n; ++iy) {
        const int ky = wavenumber(iy, n);
        for (std::size_t ix = 0; ix < n; ++ix) {
            const int kx = wavenumber(ix, n);
            if (kx == 0 && ky == 0) continue;
            const double w = double(kx) * kx + double(ky) * ky;
            int b = static_cast<int>(std::log10(w) / lw);
            if (b < 0) b = 0;
            if (b >= n_bins) b = n_bins - 1;
            mass[b] += mean_power[iy * n + ix];
            ++count[b];
        }
    }
    // Density estimate from the shell-averaged occupancy: the integer
    // lattice carries exactly pi modes per unit omega, so pi * mass/count
    // equals mass/width asymptotically but stays unbiased in the lowest
    // bins, where the actual mode count differs from pi * width severalfold.
    EnsembleSpectrum es;
    es.time = time;
    for (int b = 0; b < n_bins; ++b) {
        if (count[b] == 0) continue;
        const double lo = std::pow(10.0, b * lw);
        const double hi = std::pow(10.0, (b + 1) * lw);
        es.omega.push_back(std::sqrt(lo * hi));
        es.N.push_back(kPi * mass[b] / static_cast<double>(count[b]));
    }
    return es;
}

GriddedSpectrum ensemble_to_spectrum(const EnsembleSpectrum& es) {
    if (es.omega.size() < 2)
        throw std::invalid_argument("ensemble_to_spectrum: need at least two shells");
    // Bin centers are log-uniform by construction; rebuild the full grid
    // between the outermost occupied shells and zero-fill the gaps. The
    // elementary spacing is the smallest ratio between neighbours.
    double step = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < es.omega.size(); ++i)
        step = std::min(step, std::log(es.omega[i] / es.omega[i - 1]));
    const double span = std::log(es.omega.back() / es.omega.front());
    const auto n_points = static_cast<std::size_t>(std::round(span / step)) + 1;

    GriddedSpectrum out;
    out.grid = std::make_shared<LogFrequencyGrid>(es.omega.front(), es.omega.back(), n_points);
    std::vector<double> vals(n_points, 0.0);
    for (std::size_t i = 0; i < es.omega.size(); ++i)
        vals[out.grid->nearest(es.omega[i])] = es.N[i];
    out.spectrum = std::make_shared<Spectrum>(*out.grid, std::move(vals), es.time);
    return out;
}

namespace {
constexpr std::uint64_t kCheckpointMagic = 0x57434e4c53763101ULL;
}

void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<std::complex<double>>& psi_hat, std::size_t n,
                     double t, std::uint64_t seed, std::size_t member, long step) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write checkpoint: " + path.string());
    const std::uint64_t n64 = n, member64 = member;
    const std::int64_t step64 = step;
    const double L = kTwoPi;
    f.write(reinterpret_cast<const char*>(&kCheckpointMagic), 8);
    f.write(reinterpret_cast<const char*>(&n64), 8);
    f.write(reinterpret_cast<const char*>(&L), 8);
    f.write(reinterpret_cast<const char*>(&t), 8);
    f.write(reinterpret_cast<const char*>(&seed), 8);
    f.write(reinterpret_cast<const char*>(&member64), 8);
    f.write(reinterpret_cast<const char*>(&step64), 8);
    f.write(reinterpret_cast<const char*>(psi_hat.data()),
            static_cast<std::streamsize>(psi_hat.size() * sizeof(std::complex<double>)));
    if (!f) throw std::runtime_error("checkpoint write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read checkpoint: " + path.string());
    std::uint64_t magic = 0, n64 = 0, seed = 0, member64 = 0;
    std::int64_t step64 = 0;
    double L = 0, t = 0;
    f.read(reinterpret_cast<char*>(&magic), 8);
    if (magic != kCheckpointMagic)
        throw std::runtime_error("not a checkpoint file: " + path.string());
    f.read(reinterpret_cast<char*>(&n64), 8);
    f.read(reinterpret_cast<char*>(&L), 8);
    f.read(reinterpret_cast<char*>(&t), 8);
    f.read(reinterpret_cast<char*>(&seed), 8);
    f.read(reinterpret_cast<char*>(&member64), 8);
    f.read(reinterpret_cast<char*>(&step64), 8);
    Checkpoint cp;
    cp.n = n64;
    cp.t = t;
    cp.seed = seed;
    cp.member = member64;
    cp.step = step64;
    cp.psi_hat.resize(cp.n * cp.n);
    f.read(reinterpret_cast<char*>(cp.psi_hat.data()),
           static_cast<std::streamsize>(cp.psi_hat.size() * sizeof(std::complex<double>)));
    if (!f) throw std::runtime_error("checkpoint truncated: " + path.string());
    return cp;
}

NlsRun run_nls(const NlsConfig& cfg,
               const std::function<void(const EnsembleSpectrum&)>& on_spectrum,
               const std::filesystem::path& checkpoint_dir,
               const std::filesystem::path& resume_dir) {
    long start_step = 0;
    if (!resume_dir.empty()) {
        const Checkpoint ck = load_checkpoint(resume_dir / "member0.ckpt");
        if (ck.n != cfg.resolution)
            throw std::invalid_argument("resume checkpoint resolution mismatch");
        if (ck.seed != cfg.seed)
            throw std::invalid_argument("resume checkpoint seed mismatch");
        start_step = ck.step;
    }

    // Output schedule snapped to whole steps.
    std::vector<long> out_steps{start_step};
    const double ratio = std::pow(10.0, 1.0 / cfg.outputs_per_decade);
    const long last_step = std::lround(cfg.t_end / cfg.dt);
    for (double t = cfg.t_first_output; t < cfg.t_end * (1.0 + 1e-12); t *= ratio) {
        const long s = std::lround(t / cfg.dt);
        if (s > out_steps.back() && s < last_step) out_steps.push_back(s);
    }
    if (last_step > out_steps.back()) out_steps.push_back(last_step);
    const std::size_t n_out = out_steps.size();
    const std::size_t modes = cfg.resolution * cfg.resolution;

    std::vector<std::vector<double>> power_sum(n_out, std::vector<double>(modes, 0.0));
    std::vector<std::vector<NlsInvariants>> inv(cfg.members,
                                                std::vector<NlsInvariants>(n_out));
    std::vector<std::size_t> completed(cfg.members, 0);
    std::vector<char> blew(cfg.members, 0);
    std::mutex accum;

    auto worker = [&](std::size_t member) {
        NlsStepper stepper(cfg);
        long step = 0;
        if (resume_dir.empty()) {
            stepper.load(init_random_phase(cfg, member));
        } else {
            const Checkpoint ck =
                load_checkpoint(resume_dir / ("member" + std::to_string(member) + ".ckpt"));
            stepper.state() = ck.psi_hat;
            step = ck.step;
        }
        const double wa0 = stepper.invariants(step * cfg.dt).waveaction;
        for (std::size_t o = 0; o < n_out; ++o) {
            while (step < out_steps[o]) {
                stepper.step();
                ++step;
            }
            const double t = step * cfg.dt;
            const NlsInvariants iv = stepper.invariants(t);
            if (!std::isfinite(iv.waveaction) || iv.waveaction > 1e6 * (wa0 + 1e-300)) {
                blew[member] = 1;
                return;
            }
            inv[member][o] = iv;
            {
                std::lock_guard<std::mutex> lock(accum);
                const auto p = stepper.power();
                for (std::size_t i = 0; i < modes; ++i) power_sum[o][i] += p[i];
            }
            completed[member] = o + 1;
        }
        if (!checkpoint_dir.empty()) {
            save_checkpoint(checkpoint_dir /
                                ("member" + std::to_string(member) + ".ckpt"),
                            stepper.state(), cfg.resolution, step * cfg.dt, cfg.seed,
                            member, step);
        }
    };

    std::vector<std::thread> threads;
    threads.reserve(cfg.members);
    for (std::size_t mbr = 0; mbr < cfg.members; ++mbr) threads.emplace_back(worker, mbr);
    for (auto& th : threads) th.join();

    NlsRun run;
    std::size_t usable = n_out;
    for (std::size_t mbr = 0; mbr < cfg.members; ++mbr) {
        if (blew[mbr]) run.blowup = true;
        usable = std::min(usable, completed[mbr]);
    }
    for (std::size_t o = 0; o < usable; ++o) {
        std::vector<double> mean(modes);
        for (std::size_t i = 0; i < modes; ++i)
            mean[i] = power_sum[o][i] / double(cfg.members);
        EnsembleSpectrum es =
            bin_power(mean, cfg.resolution, cfg.bins_per_decade, out_steps[o] * cfg.dt);
        if (on_spectrum) on_spectrum(es);
        run.spectra.push_back(std::move(es));

        NlsInvariants m{out_steps[o] * cfg.dt, 0, 0, 0, 0};
        for (std::size_t mbr = 0; mbr < cfg.members; ++mbr) {
            m.waveaction += inv[mbr][o].waveaction;
            m.quad_energy += inv[mbr][o].quad_energy;
            m.hamiltonian += inv[mbr][o].hamiltonian;
            m.dissipated += inv[mbr][o].dissipated;
        }
        m.waveaction /= cfg.members;
        m.quad_energy /= cfg.members;
        m.hamiltonian /= cfg.members;
        m.dissipated /= cfg.members;
        run.invariants.push_back(m);
    }
    run.total_steps = usable ? out_steps[usable - 1] : 0;
    run.t_end = run.total_steps * cfg.dt;
    return run;
}

} // namespace wavecool
