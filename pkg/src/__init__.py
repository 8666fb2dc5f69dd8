"""
mvhp - 多変量 Hodrick-Prescott (smooth-trend) モデルの推定とトレンド抽出

META 法による構造共分散の推定、VMA(2) 縮約形の閉形式計算、
分解変換による多変量トレンド抽出の機能を提供します。
"""

__version__ = "0.1.0"
