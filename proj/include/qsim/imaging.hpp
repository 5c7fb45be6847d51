#pragma once

// Ballistic expansion, column-density rendering of the cloud onto a pixel
// grid, 2D Gaussian fitting, and the two survival observables.

#include <cstdint>
#include <string>
#include <vector>

#include "qsim/ensemble.hpp"
#include "qsim/trap.hpp"

namespace qsim {

struct ImageSpec {
    double pixel_size = 10e-6;     // m
    int width = 256;               // pixels, axial (z) axis
    int height = 128;              // pixels, radial (x) axis
    double blur_sigma = 0.0;       // m; 0 = no blur
    bool shot_noise = false;
    uint64_t noise_seed = 0;
    double expansion_time = 3e-3;  // s

    void validate() const {
        if (pixel_size <= 0.0) throw std::invalid_argument("pixel_size must be > 0");
        if (width < 2 || height < 2) throw std::invalid_argument("image must be >= 2x2 pixels");
        if (blur_sigma < 0.0) throw std::invalid_argument("blur_sigma must be >= 0");
        if (expansion_time < 0.0) throw std::invalid_argument("expansion_time must be >= 0");
    }
};

// Image plane is (z horizontal, x vertical); line of sight is y.
struct CloudImage {
    int width = 0;
    int height = 0;
    double pixel_size = 0.0;
    double expansion_time = 0.0;
    std::vector<double> pixels; // row-major, height rows of width
    std::size_t out_of_frame = 0;

    double& at(int row, int col) { return pixels[std::size_t(row) * width + col]; }
    double at(int row, int col) const { return pixels[std::size_t(row) * width + col]; }
};

// A exp(-(z-z0)^2/(2 r_z^2) - (x-x0)^2/(2 r_x^2)) + B; radii are rms widths.
struct GaussFit {
    double amplitude = 0.0;
    double center_z = 0.0; // m
    double center_x = 0.0; // m
    double r_axial = 0.0;  // m
    double r_radial = 0.0; // m
    double offset = 0.0;
    double residual_norm = 0.0;
    bool converged = false;
};

// Free flight: pos += vel * t (alive atoms); 1/2 g t^2 sag along -x when
// gravity is enabled. Velocities unchanged.
void expand(Ensemble& ens, const TrapSpec& trap, double t_exp);

// Unit count per alive atom into its pixel, then optional count-conserving
// blur and optional Poisson shot noise. Atoms outside the frame are counted
// in out_of_frame.
CloudImage render(const Ensemble& ens, const ImageSpec& spec);

// Moment initialization followed by damped Gauss-Newton least squares.
// Degenerate images come back with converged=false and moment estimates.
GaussFit fit_gaussian(const CloudImage& img);

// Mean pixel value over the (2k+1)^2 box centered on the fitted center.
// Throws if the box would clip the image edge.
double peak_intensity(const CloudImage& img, const GaussFit& fit, int box_halfwidth_px = 2);

// Sum of all pixels; proportional to surviving atom number.
double integrated_intensity(const CloudImage& img);

// k_B T = m (sigma2^2 - sigma1^2) / (t2^2 - t1^2) for rms widths at two
// expansion times. Throws on sigma2 <= sigma1 or t2 <= t1.
double temperature_from_expansion(double sigma1, double t1, double sigma2, double t2,
                                  double mass, double boltzmann_k);

// Plain P2 graymap with a comment header recording pixel_size, expansion_time
// and the 16-bit count scale.
void write_pgm(const CloudImage& img, const std::string& path);

} // namespace qsim
