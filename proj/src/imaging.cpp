#include "qsim/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>

#include "qsim/rng.hpp"

namespace qsim {

namespace {

// Count-conserving separable blur: each source pixel scatters through a
// clipped, renormalized 1D kernel, first along rows then columns.
void blur_inplace(CloudImage& img, double sigma_px) {
    const int radius = std::max(1, int(std::ceil(4.0 * sigma_px)));
    std::vector<double> kernel(2 * radius + 1);
    for (int k = -radius; k <= radius; ++k)
        kernel[k + radius] = std::exp(-0.5 * k * k / (sigma_px * sigma_px));

    auto pass = [&](int n_outer, int n_inner, auto get, auto add) {
        std::vector<double> line(n_inner);
        for (int o = 0; o < n_outer; ++o) {
            for (int i = 0; i < n_inner; ++i) line[i] = get(o, i);
            for (int i = 0; i < n_inner; ++i) add(o, i, 0.0); // zero the line
            for (int i = 0; i < n_inner; ++i) {
                const double v = line[i];
                if (v == 0.0) continue;
                const int lo = std::max(0, i - radius), hi = std::min(n_inner - 1, i + radius);
                double wsum = 0.0;
                for (int j = lo; j <= hi; ++j) wsum += kernel[j - i + radius];
                for (int j = lo; j <= hi; ++j)
                    add(o, j, get(o, j) + v * kernel[j - i + radius] / wsum);
            }
        }
    };
    pass(img.height, img.width,
         [&](int r, int c) { return img.at(r, c); },
         [&](int r, int c, double v) { img.at(r, c) = v; });
    pass(img.width, img.height,
         [&](int c, int r) { return img.at(r, c); },
         [&](int c, int r, double v) { img.at(r, c) = v; });
}

struct Moments {
    double offset, amplitude, z0, x0, rz, rx;
    bool valid;
};

Moments image_moments(const CloudImage& img) {
    Moments m{0, 0, 0, 0, 0, 0, false};
    double minv = img.pixels[0], maxv = img.pixels[0];
    for (double p : img.pixels) {
        minv = std::min(minv, p);
        maxv = std::max(maxv, p);
    }
    m.offset = minv;
    m.amplitude = maxv - minv;
    double s = 0, sz = 0, sx = 0;
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c) {
            const double w = img.at(r, c) - minv;
            if (w <= 0.0) continue;
            const double zc = (c - 0.5 * img.width + 0.5) * img.pixel_size;
            const double xc = (r - 0.5 * img.height + 0.5) * img.pixel_size;
            s += w; sz += w * zc; sx += w * xc;
        }
    if (s <= 0.0 || m.amplitude <= 0.0) return m;
    m.z0 = sz / s;
    m.x0 = sx / s;
    double szz = 0, sxx = 0;
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c) {
            const double w = img.at(r, c) - minv;
            if (w <= 0.0) continue;
            const double zc = (c - 0.5 * img.width + 0.5) * img.pixel_size - m.z0;
            const double xc = (r - 0.5 * img.height + 0.5) * img.pixel_size - m.x0;
            szz += w * zc * zc; sxx += w * xc * xc;
        }
    m.rz = std::sqrt(szz / s);
    m.rx = std::sqrt(sxx / s);
    m.valid = m.rz > 0.0 && m.rx > 0.0;
    return m;
}

// 6x6 Gaussian elimination with partial pivoting; false when singular.
bool solve6(double a[6][7]) {
    for (int col = 0; col < 6; ++col) {
        int piv = col;
        for (int r = col + 1; r < 6; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) < 1e-300) return false;
        if (piv != col)
            for (int c = 0; c < 7; ++c) std::swap(a[piv][c], a[col][c]);
        for (int r = 0; r < 6; ++r) {
            if (r == col) continue;
            const double f = a[r][col] / a[col][col];
            for (int c = col; c < 7; ++c) a[r][c] -= f * a[col][c];
        }
    }
    for (int r = 0; r < 6; ++r) a[r][6] /= a[r][r];
    return true;
}

double fit_cost(const CloudImage& img, const double p[6]) {
    double cost = 0.0;
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c) {
            const double zc = (c - 0.5 * img.width + 0.5) * img.pixel_size;
            const double xc = (r - 0.5 * img.height + 0.5) * img.pixel_size;
            const double dz = zc - p[1], dx = xc - p[2];
            const double e = std::exp(-0.5 * dz * dz / (p[3] * p[3]) -
                                      0.5 * dx * dx / (p[4] * p[4]));
            const double res = p[0] * e + p[5] - img.at(r, c);
            cost += res * res;
        }
    return cost;
}

} // namespace

void expand(Ensemble& ens, const TrapSpec& trap, double t_exp) {
    if (t_exp < 0.0) throw std::invalid_argument("expand: t_exp must be >= 0");
    const double sag = trap.gravity_enabled ? -0.5 * trap.consts.gravity_g * t_exp * t_exp : 0.0;
    for (std::size_t i = 0; i < ens.size(); ++i) {
        if (!ens.alive[i]) continue;
        ens.x[i] += ens.vx[i] * t_exp + sag;
        ens.y[i] += ens.vy[i] * t_exp;
        ens.z[i] += ens.vz[i] * t_exp;
    }
    ens.time += t_exp;
}

CloudImage render(const Ensemble& ens, const ImageSpec& spec) {
    spec.validate();
    CloudImage img;
    img.width = spec.width;
    img.height = spec.height;
    img.pixel_size = spec.pixel_size;
    img.expansion_time = spec.expansion_time;
    img.pixels.assign(std::size_t(spec.width) * spec.height, 0.0);

    for (std::size_t i = 0; i < ens.size(); ++i) {
        if (!ens.alive[i]) continue;
        const int col = int(std::floor(ens.z[i] / spec.pixel_size + 0.5 * spec.width));
        const int row = int(std::floor(ens.x[i] / spec.pixel_size + 0.5 * spec.height));
        if (col < 0 || col >= spec.width || row < 0 || row >= spec.height) {
            ++img.out_of_frame;
            continue;
        }
        img.at(row, col) += 1.0;
    }

    if (spec.blur_sigma > 0.0) blur_inplace(img, spec.blur_sigma / spec.pixel_size);

    if (spec.shot_noise) {
        std::mt19937_64 rng = make_engine(spec.noise_seed);
        for (double& p : img.pixels) {
            if (p <= 0.0) { p = 0.0; continue; }
            std::poisson_distribution<long> pois(p);
            p = double(pois(rng));
        }
    }
    return img;
}

GaussFit fit_gaussian(const CloudImage& img) {
    std::size_t nonzero = 0;
    for (double p : img.pixels)
        if (p != 0.0) ++nonzero;
    if (nonzero < 10)
        throw std::invalid_argument("fit_gaussian: image needs >= 10 nonzero pixels");

    const Moments m = image_moments(img);
    GaussFit fit;
    fit.amplitude = m.amplitude;
    fit.center_z = m.z0;
    fit.center_x = m.x0;
    fit.r_axial = m.rz;
    fit.r_radial = m.rx;
    fit.offset = m.offset;
    fit.converged = false;
    if (!m.valid) {
        const double p0[6] = {m.amplitude, m.z0, m.x0,
                              std::max(m.rz, img.pixel_size),
                              std::max(m.rx, img.pixel_size), m.offset};
        fit.residual_norm = std::sqrt(fit_cost(img, p0));
        return fit;
    }

    double p[6] = {m.amplitude, m.z0, m.x0, m.rz, m.rx, m.offset};
    double lambda = 1e-3;
    double cost = fit_cost(img, p);
    bool small_step = false;

    for (int iter = 0; iter < 100 && !small_step; ++iter) {
        double jtj[6][6] = {};
        double jtr[6] = {};
        for (int r = 0; r < img.height; ++r)
            for (int c = 0; c < img.width; ++c) {
                const double zc = (c - 0.5 * img.width + 0.5) * img.pixel_size;
                const double xc = (r - 0.5 * img.height + 0.5) * img.pixel_size;
                const double dz = zc - p[1], dx = xc - p[2];
                const double e = std::exp(-0.5 * dz * dz / (p[3] * p[3]) -
                                          0.5 * dx * dx / (p[4] * p[4]));
                const double res = p[0] * e + p[5] - img.at(r, c);
                const double j[6] = {e,
                                     p[0] * e * dz / (p[3] * p[3]),
                                     p[0] * e * dx / (p[4] * p[4]),
                                     p[0] * e * dz * dz / (p[3] * p[3] * p[3]),
                                     p[0] * e * dx * dx / (p[4] * p[4] * p[4]),
                                     1.0};
                for (int a = 0; a < 6; ++a) {
                    jtr[a] += j[a] * res;
                    for (int b = a; b < 6; ++b) jtj[a][b] += j[a] * j[b];
                }
            }
        for (int a = 0; a < 6; ++a)
            for (int b = 0; b < a; ++b) jtj[a][b] = jtj[b][a];

        bool accepted = false;
        for (int attempt = 0; attempt < 20 && !accepted; ++attempt) {
            double aug[6][7];
            for (int a = 0; a < 6; ++a) {
                for (int b = 0; b < 6; ++b) aug[a][b] = jtj[a][b];
                aug[a][a] *= 1.0 + lambda;
                aug[a][6] = -jtr[a];
            }
            if (!solve6(aug)) { lambda *= 10.0; continue; }
            double trial[6];
            for (int a = 0; a < 6; ++a) trial[a] = p[a] + aug[a][6];
            trial[3] = std::abs(trial[3]);
            trial[4] = std::abs(trial[4]);
            if (trial[3] <= 0.0 || trial[4] <= 0.0) { lambda *= 10.0; continue; }
            const double trial_cost = fit_cost(img, trial);
            if (trial_cost <= cost) {
                double step2 = 0.0, scale2 = 0.0;
                for (int a = 0; a < 6; ++a) {
                    step2 += aug[a][6] * aug[a][6];
                    scale2 += p[a] * p[a];
                }
                small_step = std::sqrt(step2) < 1e-8 * (std::sqrt(scale2) + 1e-300);
                for (int a = 0; a < 6; ++a) p[a] = trial[a];
                cost = trial_cost;
                lambda = std::max(lambda / 3.0, 1e-12);
                accepted = true;
            } else {
                lambda *= 10.0;
            }
        }
        if (!accepted) break;
    }

    fit.amplitude = p[0];
    fit.center_z = p[1];
    fit.center_x = p[2];
    fit.r_axial = p[3];
    fit.r_radial = p[4];
    fit.offset = p[5];
    fit.residual_norm = std::sqrt(cost);
    fit.converged = small_step;
    return fit;
}

double peak_intensity(const CloudImage& img, const GaussFit& fit, int box_halfwidth_px) {
    if (box_halfwidth_px < 0) throw std::invalid_argument("box halfwidth must be >= 0");
    const int col0 = int(std::floor(fit.center_z / img.pixel_size + 0.5 * img.width));
    const int row0 = int(std::floor(fit.center_x / img.pixel_size + 0.5 * img.height));
    const int k = box_halfwidth_px;
    if (col0 - k < 0 || col0 + k >= img.width || row0 - k < 0 || row0 + k >= img.height)
        throw std::runtime_error("peak_intensity: central box clipped at image edge");
    double sum = 0.0;
    for (int r = row0 - k; r <= row0 + k; ++r)
        for (int c = col0 - k; c <= col0 + k; ++c) sum += img.at(r, c);
    const double npix = double(2 * k + 1) * double(2 * k + 1);
    return sum / npix;
}

double integrated_intensity(const CloudImage& img) {
    double sum = 0.0;
    for (double p : img.pixels) sum += p;
    return sum;
}

double temperature_from_expansion(double sigma1, double t1, double sigma2, double t2,
                                  double mass, double boltzmann_k) {
    if (t1 < 0.0 || t2 <= t1)
        throw std::invalid_argument("temperature_from_expansion: need t2 > t1 >= 0");
    if (sigma2 <= sigma1)
        throw std::invalid_argument("temperature_from_expansion: need sigma2 > sigma1");
    return mass * (sigma2 * sigma2 - sigma1 * sigma1) / ((t2 * t2 - t1 * t1) * boltzmann_k);
}

void write_pgm(const CloudImage& img, const std::string& path) {
    double maxv = 0.0;
    for (double p : img.pixels) maxv = std::max(maxv, p);
    const double scale = maxv > 0.0 ? 65535.0 / maxv : 1.0;

    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_pgm: cannot open " + path);
    char header[160];
    std::snprintf(header, sizeof(header),
                  "# pixel_size_m=%.9g expansion_time_s=%.9g count_scale=%.9g",
                  img.pixel_size, img.expansion_time, scale);
    out << "P2\n" << header << "\n" << img.width << " " << img.height << "\n65535\n";
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            out << long(std::lround(img.at(r, c) * scale));
            out << (c + 1 == img.width ? '\n' : ' ');
        }
    }
    if (!out) throw std::runtime_error("write_pgm: write failed for " + path);
}

} // namespace qsim
