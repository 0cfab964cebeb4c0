"""ladderops — 半古典的直交多項式の ladder 係数と RHP 恒等式の高精度検証"""
