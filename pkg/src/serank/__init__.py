"""
SERank：以 squeeze-and-excitation 做跨文件打分的 learning-to-rank 工具組

子模組：
- core: 日誌、例外、設定模型、觀測性
- autodiff: numpy 反向自動微分
- data: LETOR 資料與合成資料
- ranking: 打分模型、損失函數、指標、FLOPs
- training: Adagrad 訓練迴圈
- experiments: 穩定性測試與消融比較
"""

__version__ = "0.1.0"
