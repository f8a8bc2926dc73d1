"""Physical and geodetic constants (WGS-84, signal frequencies)."""

CLIGHT = 299792458.0            # speed of light [m/s]
OMGE = 7.2921151467e-5          # earth rotation rate [rad/s]
GM_EARTH = 3.986004418e14       # gravitational constant * earth mass [m^3/s^2]

# WGS-84 ellipsoid
WGS84_A = 6378137.0
WGS84_F = 1.0 / 298.257223563
WGS84_B = WGS84_A * (1.0 - WGS84_F)
WGS84_E2 = WGS84_F * (2.0 - WGS84_F)

SECONDS_PER_WEEK = 604800.0

# L1-band carrier frequencies [Hz]
FREQ_GPS_L1 = 1575.42e6
FREQ_GAL_E1 = 1575.42e6
FREQ_BDS_B1 = 1561.098e6
FREQ_GLO_G1_BASE = 1602.0e6     # + channel * 0.5625 MHz (FDMA)
FREQ_GLO_G1_STEP = 0.5625e6
