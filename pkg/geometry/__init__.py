"""
Prime-field arithmetic, varieties, cyclic boxes and polynomial maps
"""
