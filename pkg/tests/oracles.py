"""Reference values computed independently of the package and frozen here.

Disk values come from the Lane-Emden profile w'' + w'/r = -w^p, w(0) = 1,
integrated with an adaptive DOP853 scheme at rtol 1e-12 and scaled to the
unit-area disk by two different routes (the alpha = 0 unit-mass condition and
the Sobolev quotient of the rescaled profile); both routes agree to 1e-11.
"""
import math

from scipy.special import jn_zeros

J0 = float(jn_zeros(0, 1)[0])
DISK_EIGENVALUE = math.pi * J0**2
SQUARE_EIGENVALUE = 2 * math.pi**2

# lambda at which the disk solution has alpha = 0 (equal to lambda_* on the disk)
DISK_THRESHOLD = {1: 18.168414535538435, 2: 12.485268665651999, 3: 9.53821563829654, 4: 7.726722454465945}
# best constant Lambda(disk, p + 1)
DISK_SOBOLEV = {2: 18.168414535538435, 3: 14.26125201869177, 4: 11.75197261620117, 5: 10.000704314521256}
# first zero of the Lane-Emden profile
LANE_EMDEN_ZERO = {2: 2.9213207237812786, 3: 3.5739009819270873}
