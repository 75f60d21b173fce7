// Discrete Fourier transforms on periodic grids and the spectral inner
// products built from them: the symbol of the 2d+1-point Laplacian and the
// discrete H^{-1} inner product used by the dual-space minimization solver.
#pragma once

#include <array>
#include <complex>
#include <vector>

#include "porodyn/grid.hpp"

namespace porodyn {

// Unnormalized forward DFT (FFTW sign convention, e^{-2πi k·j/n}); output is
// the full complex spectrum in the same row-major layout as the field.
// Requires periodic boundary conditions.
std::vector<std::complex<double>> dft_forward(const Field& u);

// Inverse of dft_forward including the 1/N normalization; returns the real
// part (imaginary residue of conjugate-symmetric spectra is discarded).
Field dft_inverse(const Grid& g, const std::vector<std::complex<double>>& spectrum);

// Maps a raw mode index in [0, n) to its signed alias in [-n/2, n/2).
int signed_mode(int k, int n);

// Eigenvalue of -laplacian() on the Fourier mode with index vector k:
//   λ_k = (2/h²) Σ_a (1 - cos(2π k_a / n)),   λ_0 = 0.
double stencil_symbol(const Grid& g, const std::array<int, 3>& k);

// Discrete H^{-1} inner product ⟨u, (-Δ_h)^{-1} w⟩_{L²} on the mean-free
// parts of u and w (the k = 0 mode is excluded, which is exactly mean
// removal). Throws BCError for non-periodic grids.
double hminus1_inner(const Field& u, const Field& w);

}  // namespace porodyn
