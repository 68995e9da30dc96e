"""Index layout of the flat float64 geometry vector shared by both kernel backends.

Per finger f (0 = left, 1 = right) a block of ``FINGER_STRIDE`` values holds
base x, base y, base heading (rad, CCW from +x), flexion sign and the three
link lengths.  Global constants follow the two finger blocks.
"""

FINGER_STRIDE = 7
BASE_X = 0
BASE_Y = 1
THETA0 = 2
SIGN = 3
LINK0 = 4

TIP_RADIUS = 14
OBJ_RADIUS = 15
Q_LO = 16
Q_HI = 17
RATE = 18
MAX_SUBSTEP = 19
RESOLVE_TOL = 20
MAX_ITER = 21
PENETRATION_TOL = 22
CONTACT_TOL = 23
# object centre may not go below PALM_Y + object radius; -inf disables the palm
PALM_Y = 24

GEOM_SIZE = 25
