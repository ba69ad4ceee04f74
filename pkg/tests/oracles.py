"""Direct-definition reference implementations for every window feature.

Written independently of the package: plain Python loops, `math`/`cmath`, a
string-based first-digit rule, and an O(L^2) DFT. Degenerate cases return the
imputed value (0.0) so outputs compare directly against extracted vectors.
"""

import cmath
import math
from collections import Counter


def o_mean(x):
    return sum(x) / len(x)


def o_variance(x):
    m = o_mean(x)
    return sum((v - m) ** 2 for v in x) / len(x)


def o_std(x):
    return math.sqrt(o_variance(x))


def o_median(x):
    s = sorted(x)
    n = len(s)
    mid = n // 2
    if n % 2 == 1:
        return s[mid]
    return (s[mid - 1] + s[mid]) / 2.0


def o_variation_coefficient(x):
    m = o_mean(x)
    if m == 0.0:
        return 0.0
    return o_std(x) / m


def o_skewness(x):
    n = len(x)
    if n < 3:
        return 0.0
    m = o_mean(x)
    m2 = sum((v - m) ** 2 for v in x) / n
    if m2 == 0.0:
        return 0.0
    m3 = sum((v - m) ** 3 for v in x) / n
    g1 = m3 / m2**1.5
    return g1 * math.sqrt(n * (n - 1)) / (n - 2)


def o_kurtosis(x):
    n = len(x)
    if n < 4:
        return 0.0
    m = o_mean(x)
    m2 = sum((v - m) ** 2 for v in x) / n
    if m2 == 0.0:
        return 0.0
    m4 = sum((v - m) ** 4 for v in x) / n
    g2 = m4 / m2**2 - 3.0
    return ((n + 1) * g2 + 6.0) * (n - 1) / ((n - 2) * (n - 3))


def o_abs_sum_of_changes(x):
    return sum(abs(b - a) for a, b in zip(x, x[1:]))


def o_mean_abs_change(x):
    return o_abs_sum_of_changes(x) / (len(x) - 1)


def o_mean_change(x):
    return (x[-1] - x[0]) / (len(x) - 1)


def _threshold_mean(x):
    # exactly-rounded mean: strict comparisons against it are unambiguous
    return math.fsum(x) / len(x)


def o_count_above_mean(x):
    m = _threshold_mean(x)
    return float(sum(1 for v in x if v > m))


def o_count_below_mean(x):
    m = _threshold_mean(x)
    return float(sum(1 for v in x if v < m))


def _longest_run(flags):
    best = run = 0
    for f in flags:
        run = run + 1 if f else 0
        best = max(best, run)
    return float(best)


def o_longest_strike_above_mean(x):
    m = _threshold_mean(x)
    return _longest_run([v > m for v in x])


def o_longest_strike_below_mean(x):
    m = _threshold_mean(x)
    return _longest_run([v < m for v in x])


def o_first_location_of_maximum(x):
    return x.index(max(x)) / len(x)


def o_first_location_of_minimum(x):
    return x.index(min(x)) / len(x)


def o_last_location_of_maximum(x):
    last = len(x) - 1 - x[::-1].index(max(x))
    return (last + 1) / len(x)


def o_last_location_of_minimum(x):
    last = len(x) - 1 - x[::-1].index(min(x))
    return (last + 1) / len(x)


def o_has_duplicate(x):
    return float(len(set(x)) < len(x))


def o_has_duplicate_max(x):
    return float(x.count(max(x)) > 1)


def o_has_duplicate_min(x):
    return float(x.count(min(x)) > 1)


def o_first_digit(v):
    """First significant decimal digit of |v| via scientific-notation formatting."""
    return int(f"{abs(v):.16e}"[0])


def o_pearson(a, b):
    n = len(a)
    ma, mb = sum(a) / n, sum(b) / n
    cov = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    va = sum((x - ma) ** 2 for x in a)
    vb = sum((y - mb) ** 2 for y in b)
    if va == 0.0 or vb == 0.0:
        return 0.0
    return cov / math.sqrt(va * vb)


def o_benford_correlation(x):
    digits = [o_first_digit(v) for v in x if v != 0.0]
    if not digits:
        return 0.0
    freq = [digits.count(d) / len(digits) for d in range(1, 10)]
    benford = [math.log10(1.0 + 1.0 / d) for d in range(1, 10)]
    return o_pearson(freq, benford)


def o_mean_second_derivative_central(x):
    n = len(x)
    if n < 3:
        return 0.0
    return sum((x[i + 1] - 2.0 * x[i] + x[i - 1]) / 2.0 for i in range(1, n - 1)) / (n - 2)


def o_sum_reoccurring_data_points(x):
    counts = Counter(x)
    return float(sum(v * c for v, c in counts.items() if c > 1))


def o_sum_reoccurring_values(x):
    counts = Counter(x)
    return float(sum(v for v, c in counts.items() if c > 1))


def o_energy(x):
    return sum(v * v for v in x)


def o_power(x):
    return o_energy(x) / len(x)


def o_dft(x):
    """Full DFT by direct summation: X_k = sum_n x_n exp(-2 pi i k n / L)."""
    n = len(x)
    return [
        sum(x[t] * cmath.exp(-2j * math.pi * k * t / n) for t in range(n)) for k in range(n)
    ]


def o_spectral_entropy(x):
    n = len(x)
    if min(x) == max(x):
        return 0.0
    m = sum(x) / n
    centered = [v - m for v in x]
    spectrum = o_dft(centered)
    power = [abs(spectrum[k]) ** 2 for k in range(1, n // 2 + 1)]
    total = sum(power)
    if total == 0.0:
        return 0.0
    entropy = 0.0
    for p in power:
        p /= total
        if p > 0.0:
            entropy -= p * math.log(p)
    return entropy


# Canonical order must match drivesense.features.ALL_FEATURES.
ORACLES = {
    "kurtosis": o_kurtosis,
    "mean": o_mean,
    "std": o_std,
    "maximum": max,
    "minimum": min,
    "variance": o_variance,
    "skewness": o_skewness,
    "median": o_median,
    "variation_coefficient": o_variation_coefficient,
    "abs_sum_of_changes": o_abs_sum_of_changes,
    "benford_correlation": o_benford_correlation,
    "count_above_mean": o_count_above_mean,
    "count_below_mean": o_count_below_mean,
    "first_location_of_maximum": o_first_location_of_maximum,
    "first_location_of_minimum": o_first_location_of_minimum,
    "has_duplicate": o_has_duplicate,
    "has_duplicate_max": o_has_duplicate_max,
    "has_duplicate_min": o_has_duplicate_min,
    "last_location_of_maximum": o_last_location_of_maximum,
    "last_location_of_minimum": o_last_location_of_minimum,
    "longest_strike_above_mean": o_longest_strike_above_mean,
    "longest_strike_below_mean": o_longest_strike_below_mean,
    "mean_abs_change": o_mean_abs_change,
    "mean_change": o_mean_change,
    "mean_second_derivative_central": o_mean_second_derivative_central,
    "sum_reoccurring_data_points": o_sum_reoccurring_data_points,
    "sum_reoccurring_values": o_sum_reoccurring_values,
    "energy": o_energy,
    "power": o_power,
    "entropy": o_spectral_entropy,
}


