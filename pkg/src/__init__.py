"""
RightSize Studio - Source Package
"""
