// LimPID step routine, decompiled

void FUN_00101890(long param_1)
{
  *(double *)(param_1 + 0x1a8) = 0.2;
  *(double *)(param_1 + 0x1b0) = 0.1;
  return;
}

void FUN_00101b20(long param_1,double param_2)
{
  double dVar1;
  double dVar2;
  double dVar3;
  double dVar4;
  double dVar5;
  double dVar6;
  double dVar7;
  double dVar8;
  double dVar9;
  double dVar10;
  double dVar11;
  double dVar12;
  double dVar13;
  dVar1 = *(double *)(param_1 + 0x220) * *(double *)(param_1 + 0x28) - *(double *)(param_1 + 0x60);
  *(double *)(param_1 + 0x1f8) = dVar1;
  dVar2 = *(double *)(param_1 + 0x28) - *(double *)(param_1 + 0x60);
  *(double *)(param_1 + 0x230) = dVar2;
  dVar3 = *(double *)(param_1 + 0x258) * *(double *)(param_1 + 0x28) - *(double *)(param_1 + 0x60);
  *(double *)(param_1 + 0x268) = dVar3;
  dVar4 = *(double *)(param_1 + 0x1b0) * *(double *)(param_1 + 0x20);
  *(double *)(param_1 + 0x90) = dVar4;
  dVar5 = *(double *)(param_1 + 0x1e8) * *(double *)(param_1 + 0x48) * -(*(double *)(param_1 + 0x58) - *(double *)(param_1 + 0x268));
  *(double *)(param_1 + 0xc8) = dVar5;
  dVar6 = *(double *)(param_1 + 0x178) * (*(double *)(param_1 + 0x1f8) + *(double *)(param_1 + 0x90) + *(double *)(param_1 + 0xc8));
  *(double *)(param_1 + 0x100) = dVar6;
  dVar7 = *(double *)(param_1 + 0x80) * *(double *)(param_1 + 0x98) * 0.2;
  *(double *)(param_1 + 0x138) = dVar7;
  dVar8 = *(double *)(param_1 + 0x100) + *(double *)(param_1 + 0x138);
  *(double *)(param_1 + 0x170) = dVar8;
  dVar9 = fmin(fmax(*(double *)(param_1 + 0x170), *(double *)(param_1 + 0xf0)), *(double *)(param_1 + 0xb8));
  *(double *)(param_1 + 0xd0) = dVar9;
  dVar10 = *(double *)(param_1 + 0xd0) - *(double *)(param_1 + 0x170);
  *(double *)(param_1 + 0x1a8) = dVar10;
  dVar11 = *(double *)(param_1 + 0x170) > *(double *)(param_1 + 0xb8) || *(double *)(param_1 + 0x170) < *(double *)(param_1 + 0xf0);
  *(bool *)(param_1 + 0x108) = dVar11;
  dVar12 = *(double *)(param_1 + 0x230) + *(double *)(param_1 + 0x10) * *(double *)(param_1 + 0x1a8);
  *(double *)(param_1 + 0x20) = *(double *)(param_1 + 0x20) + dVar12 * param_2;
  dVar13 = -(*(double *)(param_1 + 0x58) - *(double *)(param_1 + 0x268)) * *(double *)(param_1 + 0x48);
  *(double *)(param_1 + 0x58) = *(double *)(param_1 + 0x58) + dVar13 * param_2;
  return;
}
