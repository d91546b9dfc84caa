"""16ビット浮動小数点で保存したカード取引データに対する不正検知ベンチマーク。"""

__version__ = "0.1.0"
