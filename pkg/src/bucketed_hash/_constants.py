EMPTY_KEY = 0xFFFFFFFF
EMPTY_VALUE = 0xFFFFFFFF
# Slot layout: key in the low 32 bits, value in the high 32 bits.
EMPTY_PAIR = (EMPTY_VALUE << 32) | EMPTY_KEY
MAX_USER_KEY = EMPTY_KEY - 1
PRIME = 4294967291
