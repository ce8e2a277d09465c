"""
Count fields over all translates and the statistics derived from them
"""
