"""
formal-groupoid-kit

分離変数型の変形量子化に付随する形式シンプレクティック亜群を、
多項式 Kähler-Poisson チャート上で切断次数つきの厳密計算によって構成・検証するパッケージ。
"""

__version__ = "0.1.0"
