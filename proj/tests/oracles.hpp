#pragma once

// Reference values computed independently at 30 significant digits.
namespace oracle {

inline constexpr double theta_sum_pos = 0.38631860241332608;  // sum_{n>=1} e^{-n^2}
inline constexpr double alpha = 2.275389834539167414;         // 1 / sqrt(ln 2 - 1/2)

inline constexpr double amp0_re = 0.97324779000033124;
inline constexpr double amp1_re = 0.24930466550297757, amp1_im = 0.19401505619498999;
inline constexpr double amp5_re = -0.0015542325307482593, amp5_im = 0.000065098576924811238;

struct Pair {
    double k, re, im;
};

// zeta(1/2 - ik)
inline constexpr Pair zeta[] = {
    {0.5, -0.4593028903460181729, 0.96125428450587909334},
    {3.0, 0.53273667097423288392, 0.078896513425833382656},
    {14.0, 0.022241142609993589246, 0.1032581232664500579},
    {30.0, -0.12064228759004369991, 0.58369121476370628876},
    {50.0, -0.081712108320979975048, -0.33079219403866129559},
};

// Gamma(1/2 - ik)
inline constexpr Pair gamma[] = {
    {0.5, 0.81816399954174739408, 0.76331382871398261667},
    {3.0, 0.02144567055243064606, -0.0068653648372616779142},
    {14.0, -4.0537030780372814884e-10, 5.7732998345536051632e-10},
    {30.0, -8.3736476967132581791e-21, -1.8665376522944921191e-21},
    {50.0, 9.0332043526006192339e-35, -1.7263622522690938061e-34},
};

inline constexpr double riemann_zero1 = 14.134725141734693790;
inline constexpr double riemann_zero2 = 21.022039638771554993;

inline constexpr double riemann_counting_100 = 29.002343587325348;

// Robin rho = 1 on an edge of log length 4: negative levels -kappa^2.
inline constexpr double robin_kappa[] = {0.9575040240772687, 1.0326690694873524};

// min over kappa of (ln 2E + 2 artanh(kappa / lambda)) / kappa
inline constexpr double l_sigma_E1_lam1 = 3.45190211927139450784;
inline constexpr double l_sigma_E3_lam2 = 2.48850983156055623610;

// -e^{0.1} erfc(sqrt(0.1)): S'' integral for Robin rho = 1, t = 0.1
inline constexpr double robin_s_integral_t01 = -0.723578438477615497555;

// Kirchhoff star, log lengths 1, 1.3, 1.7, Neumann leaves: sum tan(k l_j) = 0
inline constexpr double star_levels[] = {1.0250396927130074, 1.3843048121436934, 2.3435151384450017,
                                         3.1415926535897932, 4.015372046777851};

}  // namespace oracle
